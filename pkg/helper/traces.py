"""
Traces Module
Finite traces, lasso words u·v^ω and trace-file ingestion.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, TextIO, Tuple, Union

from constants.constants import TRACE_COMMENT, TRACE_SEPARATOR
from helper.errors import BadParams, EmptyCycle, TraceParseError, UnknownSymbol

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Alphabet:
    """Ordered, duplicate-free list of observation labels."""

    symbols: Tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        if not symbols:
            raise BadParams("alphabet must not be empty")
        if len(set(symbols)) != len(symbols):
            raise BadParams(f"alphabet labels must be unique: {list(symbols)}")
        for label in symbols:
            if not label or any(ch.isspace() for ch in label) or TRACE_SEPARATOR in label or TRACE_COMMENT in label:
                raise BadParams(f"invalid alphabet label {label!r}")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[str]:
        return iter(self.symbols)

    def index(self, label: str, position: int = None) -> int:
        try:
            return self.symbols.index(label)
        except ValueError:
            raise UnknownSymbol(label, position)

    def label(self, index: int) -> str:
        return self.symbols[index]

    def encode(self, labels: Iterable[str]) -> Tuple[int, ...]:
        return tuple(self.index(label, pos) for pos, label in enumerate(labels, start=1))


@dataclass(frozen=True)
class FiniteTrace:
    alphabet: Alphabet
    symbols: Tuple[int, ...] = ()

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        for pos, s in enumerate(symbols, start=1):
            if not 0 <= s < len(self.alphabet):
                raise UnknownSymbol(str(s), pos)
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def of(cls, alphabet: Alphabet, labels: Iterable[str]) -> "FiniteTrace":
        return cls(alphabet, alphabet.encode(labels))

    def __len__(self) -> int:
        return len(self.symbols)

    def labels(self) -> List[str]:
        return [self.alphabet.label(s) for s in self.symbols]

    def prefix(self, n: int) -> "FiniteTrace":
        return FiniteTrace(self.alphabet, self.symbols[:n])

    def prefixes(self) -> Iterator["FiniteTrace"]:
        """All prefixes, from the empty trace up to the trace itself."""
        for n in range(len(self.symbols) + 1):
            yield self.prefix(n)

    def extend(self, symbols: Sequence[int]) -> "FiniteTrace":
        return FiniteTrace(self.alphabet, self.symbols + tuple(symbols))

    def __str__(self) -> str:
        return " ".join(self.labels())


@dataclass(frozen=True)
class Lasso:
    """The ultimately periodic infinite trace stem·cycle^ω."""

    alphabet: Alphabet
    stem: Tuple[int, ...]
    cycle: Tuple[int, ...]

    def __post_init__(self):
        stem = tuple(int(s) for s in self.stem)
        cycle = tuple(int(s) for s in self.cycle)
        if not cycle:
            raise EmptyCycle("lasso cycle must contain at least one symbol")
        for pos, s in enumerate(stem + cycle, start=1):
            if not 0 <= s < len(self.alphabet):
                raise UnknownSymbol(str(s), pos)
        object.__setattr__(self, "stem", stem)
        object.__setattr__(self, "cycle", cycle)

    @classmethod
    def of(cls, alphabet: Alphabet, stem: Iterable[str], cycle: Iterable[str]) -> "Lasso":
        return cls(alphabet, alphabet.encode(stem), alphabet.encode(cycle))

    @property
    def stem_trace(self) -> FiniteTrace:
        return FiniteTrace(self.alphabet, self.stem)

    @property
    def cycle_trace(self) -> FiniteTrace:
        return FiniteTrace(self.alphabet, self.cycle)

    def symbol_at(self, i: int) -> int:
        if i < len(self.stem):
            return self.stem[i]
        return self.cycle[(i - len(self.stem)) % len(self.cycle)]

    def unroll(self, n: int) -> FiniteTrace:
        """The prefix of length n of the infinite trace."""
        return FiniteTrace(self.alphabet, tuple(self.symbol_at(i) for i in range(n)))

    def prepend(self, prefix: Sequence[int]) -> "Lasso":
        return Lasso(self.alphabet, tuple(prefix) + self.stem, self.cycle)

    def __str__(self) -> str:
        stem = " ".join(self.alphabet.label(s) for s in self.stem)
        cycle = " ".join(self.alphabet.label(s) for s in self.cycle)
        return f"{stem} ; {cycle}" if stem else f"; {cycle}"


def _primitive_root(cycle: Tuple[int, ...]) -> Tuple[int, ...]:
    n = len(cycle)
    for d in range(1, n + 1):
        if n % d == 0 and cycle[:d] * (n // d) == cycle:
            return cycle[:d]
    return cycle


def normalize(l: Lasso) -> Lasso:
    """
    Canonical representative of the infinite trace of l: the cycle is reduced
    to its primitive root and the stem is absorbed into the cycle while its
    last symbol equals the cycle's last symbol.
    """
    stem = l.stem
    cycle = _primitive_root(l.cycle)
    while stem and stem[-1] == cycle[-1]:
        stem = stem[:-1]
        cycle = (cycle[-1],) + cycle[:-1]
    return Lasso(l.alphabet, stem, cycle)


def count(w: FiniteTrace, sym: str) -> int:
    """Number of occurrences of the label sym in w."""
    index = w.alphabet.index(sym)
    return sum(1 for s in w.symbols if s == index)


def _tokens(text: str) -> Iterator[str]:
    for line in text.splitlines():
        line = line.split(TRACE_COMMENT, 1)[0]
        line = line.replace(TRACE_SEPARATOR, f" {TRACE_SEPARATOR} ")
        for token in line.split():
            yield token


def parse_trace(text: Union[bytes, str], a: Alphabet) -> Union[FiniteTrace, Lasso]:
    """
    Parse whitespace-separated labels; a single ";" separates stem from cycle.

    Returns:
        A FiniteTrace without ";", a Lasso otherwise.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise TraceParseError(f"trace is not valid UTF-8: {e}")

    stem: List[int] = []
    cycle: List[int] = []
    separated = False
    position = 0
    for token in _tokens(text):
        if token == TRACE_SEPARATOR:
            if separated:
                raise TraceParseError(f"more than one '{TRACE_SEPARATOR}' after symbol {position}")
            separated = True
            continue
        position += 1
        index = a.index(token, position)
        (cycle if separated else stem).append(index)

    if not separated:
        return FiniteTrace(a, tuple(stem))
    if not cycle:
        raise EmptyCycle(f"nothing follows '{TRACE_SEPARATOR}' after symbol {position}")
    return Lasso(a, tuple(stem), tuple(cycle))


def iter_symbols(stream: TextIO, a: Alphabet) -> Iterator[Tuple[int, int]]:
    """
    Stream (position, symbol index) pairs from a trace file line by line,
    without reading the whole file.
    """
    position = 0
    for line in stream:
        for token in _tokens(line):
            if token == TRACE_SEPARATOR:
                raise TraceParseError(f"'{TRACE_SEPARATOR}' is not allowed in a streamed trace (after symbol {position})")
            position += 1
            yield position, a.index(token, position)


def format_symbols(a: Alphabet, symbols: Sequence[int]) -> str:
    return " ".join(a.label(s) for s in symbols)
