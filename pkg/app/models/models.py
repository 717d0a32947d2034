import enum


class StructureKind(str, enum.Enum):
    SYMPLECTIC = "SYMPLECTIC"
    LCS = "LCS"
    CONTACT = "CONTACT"
    DEGENERATE = "DEGENERATE"
    NOT_CONFORMALLY_CLOSED = "NOT_CONFORMALLY_CLOSED"


class NondegStatus(str, enum.Enum):
    NONDEGENERATE = "NONDEGENERATE"
    DEGENERATE_AT_SAMPLES = "DEGENERATE_AT_SAMPLES"
    IDENTICALLY_DEGENERATE = "IDENTICALLY_DEGENERATE"


class FoliatedKind(str, enum.Enum):
    FOLIATED_SYMPLECTIC = "FOLIATED_SYMPLECTIC"
    FOLIATED_LCS = "FOLIATED_LCS"
    FOLIATED_CONTACT = "FOLIATED_CONTACT"
    ALMOST_CONTACT = "ALMOST_CONTACT"
    NONE = "NONE"


class TaskKind(str, enum.Enum):
    CHECK = "check"
    FLOW = "flow"
    DECOMPOSE = "decompose"
    GRAYSTEP = "graystep"


class CheckKind(str, enum.Enum):
    CONTACT = "contact"
    REEB = "reeb"
    HAMILTONIAN = "hamiltonian"
    CLASSIFY_2FORM = "classify_2form"
    POISSON = "poisson"
    JACOBI = "jacobi"
    DICHOTOMY = "dichotomy"
    FOLIATED = "foliated"
    TRANSVERSALITY = "transversality"
    GRADIENT_FRAME = "gradient_frame"


class TaskStatus(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"
