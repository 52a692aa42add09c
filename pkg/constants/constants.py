# ============= EXIT CODES =============
EXIT_OK = 0
EXIT_VERDICT_NO = 1
EXIT_BOUNDED_ONLY = 2
EXIT_DEPTH_EXCEEDED = 3
EXIT_USAGE = 64
EXIT_DATA = 65

# ============= ANALYSIS DEFAULTS =============
DEFAULT_SEED = 7
DEFAULT_BUDGET = 6
DEFAULT_MAX_DEPTH = 32
DEFAULT_RANDOM_SAMPLES = 400
DEFAULT_SAMPLE_CAP = 4096
DEFAULT_MAX_CLASSES = 200000
DEFAULT_LOG_LEVEL = "WARNING"
VALUE_TOLERANCE = 1e-9

# Oracle closures without an analytic lasso rule fall back to this many cycle passes.
CLOSURE_HORIZON_PASSES = 64

# ============= ENVIRONMENT KEYS =============
ENV_SEED = "QSL_SEED"
ENV_BUDGET = "QSL_BUDGET"
ENV_MAX_DEPTH = "QSL_MAX_DEPTH"
ENV_SAMPLES = "QSL_SAMPLES"
ENV_SAMPLE_CAP = "QSL_SAMPLE_CAP"
ENV_MAX_CLASSES = "QSL_MAX_CLASSES"
ENV_LOG_LEVEL = "QSL_LOG_LEVEL"

# ============= CHECK NAMES =============
CHECK_SAFE = "safe"
CHECK_COSAFE = "cosafe"
CHECK_LIVE = "live"
CHECK_COLIVE = "colive"
CHECK_MULTILIVE = "multilive"
CHECK_SUP_CLOSED = "sup_closed"
CHECK_VERDICT_SAFE = "verdict_safe"
CHECK_VERDICT_LIVE = "verdict_live"

REPORT_CHECKS = (
    CHECK_SAFE,
    CHECK_COSAFE,
    CHECK_LIVE,
    CHECK_COLIVE,
    CHECK_MULTILIVE,
    CHECK_SUP_CLOSED,
    CHECK_VERDICT_SAFE,
    CHECK_VERDICT_LIVE,
)

# ============= RESPONSE-TIME ALPHABET =============
REQUEST = "rq"
GRANT = "gr"
TICK = "tk"
OTHER = "oo"
RESPONSE_ALPHABET = (REQUEST, GRANT, TICK, OTHER)

# ============= FILE FORMATS =============
SPEC_FILE_VERSION = 1
TRACE_COMMENT = "#"
TRACE_SEPARATOR = ";"

PROPERTY_BUILTIN_KEYS = ("version", "builtin", "params")
PROPERTY_FIXTURE_KEYS = ("version", "fixture")
PROPERTY_MACHINE_KEYS = (
    "version",
    "alphabet",
    "domain",
    "states",
    "initial",
    "transitions",
    "value_function",
)
MONITOR_KEYS = (
    "version",
    "delta",
    "value_function",
    "alphabet",
    "initial",
    "classes",
    "transitions",
)

DECOMPOSITION_MODES = ("safety-liveness", "cosafety-coliveness", "live-live")
CLOSURE_KINDS = ("safety", "cosafety")
