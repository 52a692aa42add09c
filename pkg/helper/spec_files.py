"""
Specification Files Module
Strict JSON property files (builtin, fixture and explicit machine forms),
monitor files and trace files.
"""

import json
import logging
import math
from typing import Any, Dict, Union

from constants.constants import (
    PROPERTY_BUILTIN_KEYS,
    PROPERTY_FIXTURE_KEYS,
    PROPERTY_MACHINE_KEYS,
    SPEC_FILE_VERSION,
)
from helper.builtins import builtin, fixture
from helper.domains import ValueDomain, Value, domain_from_descriptor
from helper.errors import QuantError, SpecFileError
from helper.machines import FinitaryMachine, ValueFunction
from helper.monitor import AbstractMonitor, import_monitor
from helper.props import Property, machine_property
from helper.traces import Alphabet, FiniteTrace, Lasso, parse_trace

logger = logging.getLogger(__name__)


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise SpecFileError(path, f"cannot read file: {e.strerror}")


def _json(raw: Union[bytes, str], path: str) -> Any:
    try:
        return json.loads(raw)
    except UnicodeDecodeError as e:
        raise SpecFileError(path, f"not valid UTF-8: {e}")
    except json.JSONDecodeError as e:
        raise SpecFileError(path, f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")


def _exact_keys(data: Dict[str, Any], keys, path: str, form: str, optional=()) -> None:
    unknown = set(data) - set(keys)
    if unknown:
        raise SpecFileError(path, f"unknown fields for a {form} property: {sorted(unknown)}")
    missing = [k for k in keys if k not in data and k not in optional]
    if missing:
        raise SpecFileError(path, f"missing fields for a {form} property: {missing}")


# ============= PROPERTIES =============

def _machine_from_dict(data: Dict[str, Any], path: str) -> Property:
    alphabet = Alphabet(tuple(data["alphabet"]))
    domain = domain_from_descriptor(data["domain"])
    states = data["states"]
    if not isinstance(states, list) or not states:
        raise SpecFileError(path, "states must be a nonempty list")
    names = []
    outputs = []
    for i, state in enumerate(states):
        if not isinstance(state, dict) or set(state) != {"id", "output"}:
            raise SpecFileError(path, f"state {i} must have exactly the fields id and output")
        names.append(str(state["id"]))
        outputs.append(domain.parse_value(state["output"]))
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise SpecFileError(path, "state ids must be unique")

    delta = [[None] * len(alphabet) for _ in names]
    for t in data["transitions"]:
        if not isinstance(t, dict) or set(t) != {"from", "symbol", "to"}:
            raise SpecFileError(path, f"transition {t!r} must have exactly the fields from, symbol and to")
        if t["from"] not in index or t["to"] not in index:
            raise SpecFileError(path, f"transition {t!r} refers to an unknown state")
        q, a = index[t["from"]], alphabet.index(t["symbol"])
        if delta[q][a] is not None:
            raise SpecFileError(path, f"state {t['from']} has two transitions on {t['symbol']}")
        delta[q][a] = index[t["to"]]
    for q, row in enumerate(delta):
        for a, target in enumerate(row):
            if target is None:
                raise SpecFileError(path, f"state {names[q]} has no transition on {alphabet.label(a)}")
    if data["initial"] not in index:
        raise SpecFileError(path, f"initial state {data['initial']!r} does not exist")

    machine = FinitaryMachine(alphabet, domain, outputs, delta, index[data["initial"]], names)
    vf = ValueFunction.parse(data["value_function"])
    return machine_property(machine, vf, "machine", {key: data[key] for key in PROPERTY_MACHINE_KEYS if key != "version"})


def parse_property(data: Any, path: str = "<property>") -> Property:
    """
    Build a property from a decoded property file.

    Raises:
        SpecFileError: for any schema violation or invalid content
    """
    if not isinstance(data, dict):
        raise SpecFileError(path, "a property file must contain a JSON object")
    if data.get("version") != SPEC_FILE_VERSION:
        raise SpecFileError(path, f"version must be {SPEC_FILE_VERSION}, got {data.get('version')!r}")
    try:
        if "builtin" in data:
            _exact_keys(data, PROPERTY_BUILTIN_KEYS, path, "builtin", optional=("params",))
            return builtin(data["builtin"], data.get("params") or {})
        if "fixture" in data:
            _exact_keys(data, PROPERTY_FIXTURE_KEYS, path, "fixture")
            return fixture(data["fixture"])
        _exact_keys(data, PROPERTY_MACHINE_KEYS, path, "machine")
        return _machine_from_dict(data, path)
    except SpecFileError:
        raise
    except QuantError as e:
        raise SpecFileError(path, e.diagnostic())
    except (TypeError, KeyError, AttributeError) as e:
        raise SpecFileError(path, f"malformed property: {e}")


def load_property(path: str) -> Property:
    p = parse_property(_json(_read(path), path), path)
    logger.info(f"Loaded property {p.name} from {path}")
    return p


def _json_value(v: Value, domain: ValueDomain) -> Any:
    if domain.is_numeric and isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v):
        return v
    return domain.format_value(v)


def property_to_dict(p: Property) -> Dict[str, Any]:
    """
    File form of a property: machines are written out state by state,
    builtins and fixtures by reference.
    """
    descriptor = p.describe()
    if "builtin" in descriptor or "fixture" in descriptor:
        return {"version": SPEC_FILE_VERSION, **descriptor}
    if p.is_machine:
        machine = p.machine
        return {
            "version": SPEC_FILE_VERSION,
            "alphabet": list(machine.alphabet),
            "domain": machine.domain.to_descriptor(),
            "states": [
                {"id": name, "output": _json_value(out, machine.domain)}
                for name, out in zip(machine.names, machine.outputs)
            ],
            "initial": machine.names[machine.initial],
            "transitions": [
                {"from": machine.names[q], "symbol": machine.alphabet.label(a), "to": machine.names[target]}
                for q, row in enumerate(machine.delta)
                for a, target in enumerate(row)
            ],
            "value_function": p.value_function.value,
        }
    return descriptor


def dump_property(p: Property) -> bytes:
    return (json.dumps(property_to_dict(p), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


# ============= MONITORS AND TRACES =============

def load_monitor(path: str) -> AbstractMonitor:
    raw = _read(path)
    try:
        return import_monitor(_json(raw, path))
    except SpecFileError:
        raise
    except QuantError as e:
        raise SpecFileError(path, e.diagnostic())


def load_trace(path: str, alphabet: Alphabet) -> Union[FiniteTrace, Lasso]:
    """Parse a whole trace file; symbol positions in errors are 1-based."""
    return parse_trace(_read(path), alphabet)
