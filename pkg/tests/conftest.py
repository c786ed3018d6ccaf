"""Collects one pass/fail line per acceptance criterion and prints them at the end."""

ACCEPTANCE: dict[int, tuple[bool, str]] = {}

# unit tests that together make up the property criterion
PROPERTY_TESTS = (
    "test_partition_of_unity",
    "test_polynomial_reproduction",
    "test_tensor_solve_against_dense_kronecker",
    "test_bdf4_exact_on_quartics",
    "test_rk4_global_order",
    "test_linear_stab_annihilates_low_degree",
    "test_uniform_state_is_fixed_point",
    "test_artificial_viscosity_bounded_by_first_order",
    "test_gp_viscosity_ratio",
    "test_gp_kappa_mu_ratio_in_run",
)
_property_outcomes: dict[str, list[str]] = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1].split("[")[0]
    if name not in PROPERTY_TESTS:
        return
    if report.when == "call" or report.outcome != "passed":
        _property_outcomes.setdefault(name, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    lines = []
    if _property_outcomes:
        missing = [n for n in PROPERTY_TESTS if n not in _property_outcomes]
        bad = sorted(n for n, o in _property_outcomes.items()
                     if any(x == "failed" for x in o))
        ok = not missing and not bad
        detail = "all property tests passed" if ok else f"failed={bad} not run={missing}"
        ACCEPTANCE.setdefault(8, (ok, detail))
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        lines.append(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
    for line in lines:
        terminalreporter.write_line(line)
