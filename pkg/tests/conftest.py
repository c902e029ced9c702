import numpy as np
from hypothesis import strategies as st

from nsdyn.potentials import PotentialSeq
from nsdyn.seqspace import AlphabetSeq, PointPrefix


@st.composite
def alphabets(draw, max_size=4, max_head=2, max_period=3):
    head = draw(st.lists(st.integers(2, max_size), max_size=max_head))
    period = draw(st.lists(st.integers(2, max_size), min_size=1, max_size=max_period))
    return AlphabetSeq(tuple(head), tuple(period))


finite_floats = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def first_coord_potentials(draw, m=None):
    if m is None:
        m = draw(alphabets())
    rows = [np.array(draw(st.lists(finite_floats, min_size=m(k), max_size=m(k)))) for k in range(m.n_classes)]
    h = len(m.head)
    return PotentialSeq.first_coord(m, rows[:h], rows[h:])


@st.composite
def depth_potentials(draw, m=None, depth=2):
    if m is None:
        m = draw(alphabets(max_size=3))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    tables = [rng.normal(size=tuple(m.sizes(k, depth))) for k in range(m.n_classes)]
    h = len(m.head)
    return PotentialSeq(m, depth, tables[:h], tables[h:])


@st.composite
def points(draw, m, level=0, length=12):
    syms = [draw(st.integers(1, m(level + j))) for j in range(length)]
    return PointPrefix(level, tuple(syms))


def random_first_coord(m, rng, scale=1.0):
    rows = [rng.normal(scale=scale, size=m(k)) for k in range(m.n_classes)]
    h = len(m.head)
    return PotentialSeq.first_coord(m, rows[:h], rows[h:])


# one summary line per acceptance criterion, printed after the run
_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::test_criterion_")[1]
        number, _, label = name.partition("_")
        _CRITERIA[int(number)] = (label.replace("_", " "), "PASS" if report.outcome == "passed" else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        label, verdict = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {label}")
