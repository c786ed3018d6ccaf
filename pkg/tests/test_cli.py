import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isocoll import cli
from isocoll.cases import builtin_case
from isocoll.config import ConfigError, RunConfig, parse_config, serialize_config
from isocoll.integrator import SemiDiscreteSystem
from isocoll.io import dump_fields
from isocoll.stabilization import ViscosityState

SMALL = """\
[case]
case = burgers_riemann_1d
n = 16
k = 3
t_final = 0.002
dt = 1e-4
"""


# ---- configuration ------------------------------------------------------------

configs = st.builds(
    RunConfig,
    case=st.sampled_from(["adv_smooth", "burgers_riemann_1d", "euler_sod"]),
    n_elements=st.tuples(st.integers(2, 64)),
    degree=st.integers(2, 6),
    dt=st.one_of(st.none(), st.floats(1e-6, 1e-2)),
    t_final=st.one_of(st.none(), st.floats(0.0, 1.0)),
    ic_policy=st.sampled_from([None, "inject", "interpolate"]),
    meshes=st.one_of(st.none(), st.lists(st.integers(2, 99), min_size=2, max_size=4).map(tuple)),
    c_lin=st.one_of(st.none(), st.floats(0.01, 2.0)),
    normalization=st.sampled_from(["global", "local"]),
    bdf_startup=st.sampled_from(["wait", "ramp"]),
    out_dir=st.one_of(st.none(), st.sampled_from(["out", "runs/a b"])),
    dump_every=st.integers(0, 50),
)


@settings(max_examples=60, deadline=None)
@given(cfg=configs)
def test_serialize_round_trip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg


def test_comments_aliases_and_override():
    cfg = parse_config("# header\n[case]\ncase = adv_smooth ; trailing\nn_elements = 8 8\n"
                       "degree = 3\n[stabilization]\nC_lin = 0.5\n")
    assert cfg.n_elements == (8, 8) and cfg.degree == 3
    assert cfg.case_definition().constants.c_lin == 0.5
    assert cfg.run_options().constants.c_lin == 0.5
    assert builtin_case("adv_smooth").constants.c_lin == 0.25


@pytest.mark.parametrize("text,line,fragment", [
    (SMALL + "bogus = 1\n", 7, "unknown key"),
    (SMALL + "k = 4\n", 7, "duplicate"),
    ("[case]\ncase = adv_smooth\nn = 4\nk = 3\n[stabilization]\ndt = 1\n", 6, "belongs in"),
    ("[case]\ncase = adv_smooth\nn = -4\nk = 3\n", 3, "positive"),
    ("[case]\ncase = nope\n", 2, "case"),
    ("[cases]\n", 1, "unknown section"),
    ("[case]\ncase = adv_smooth\nn = 4\nk = 3\nregularization = laplacian\n", 5,
     "Euler cases only"),
    ("[case]\ncase = adv_smooth\nn = 4\nk = 3\n[stabilization]\nlinear = false\nC_lin = 1\n",
     7, "linear stabilization is off"),
    ("[case]\ncase = adv_smooth\nn = 4\nk = 1\n", 4, "k >= 2"),
])
def test_config_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")
    assert fragment in str(info.value)


def test_empty_config_lists_required_keys():
    with pytest.raises(ConfigError, match="missing required keys: case, n, k"):
        parse_config("")


# ---- field dumps ----------------------------------------------------------------

def test_constant_state_dumps_constant_columns(tmp_path):
    case = builtin_case("euler_sod")
    system = SemiDiscreteSystem(case, 10, 3)
    u = case.law.conserved(np.array(0.8), np.array([0.3]), np.array(1.1))
    coeffs = np.broadcast_to(u, system.state_shape).copy()
    state = system.initial_state()
    state.coeffs = coeffs
    visc = ViscosityState.zeros(system.grid_shape, guermond_popov=True)
    path = dump_fields(system, state, visc, 33, tmp_path / "s.csv")
    header = path.read_text().splitlines()[0].split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert header == ["x", "rho", "mom", "E", "u", "p", "nu_art", "mu_art", "kappa_art"]
    assert data.shape == (33, 9) and data[0, 0] == 0.0 and data[-1, 0] == 1.0
    cols = dict(zip(header, data.T))
    assert np.allclose(cols["rho"], 0.8, atol=1e-13) and np.allclose(cols["u"], 0.3)
    assert np.allclose(cols["p"], 1.1) and not cols["nu_art"].any()


# ---- command line ---------------------------------------------------------------------

def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_solve_writes_outputs_and_is_deterministic(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert cli.main(["solve", cfg, "--out", str(out), "--dump-every", "10"]) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == ["diagnostics.txt", "solution.csv", "solution_00000010.csv",
                     "solution_00000020.csv", "viscosity.csv"]
    for name in names:
        if name.endswith(".csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    assert "burgers_riemann_1d" in capsys.readouterr().out


def test_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["solve", _write(tmp_path, SMALL + "oops = 2\n")]) == cli.EXIT_CONFIG
    assert "line 7" in capsys.readouterr().err
    assert cli.main(["dry-run", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG


def test_blow_up_exit_code(tmp_path):
    text = SMALL.replace("dt = 1e-4", "dt = 0.5").replace("t_final = 0.002", "t_final = 10")
    out = tmp_path / "o"
    assert cli.main(["solve", _write(tmp_path, text), "--out", str(out)]) == cli.EXIT_BLOWUP
    assert "# blow-up:" in (out / "diagnostics.txt").read_text()


def test_dry_run_resolves_case_defaults(tmp_path, capsys):
    assert cli.main(["dry-run", _write(tmp_path, SMALL)]) == 0
    text = capsys.readouterr().out
    assert "C_max = " in text and "ic = inject" in text
    assert parse_config(text).c_max == builtin_case("burgers_riemann_1d").constants.c_max


def test_converge_writes_table(tmp_path, capsys):
    text = ("[case]\ncase = burgers_smooth\nn = 8\nk = 3\nmeshes = 8 16\nt_final = 0.001\n"
            "dt = 1e-4\n")
    out = tmp_path / "c"
    assert cli.main(["converge", _write(tmp_path, text), "--out", str(out)]) == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "case,k,n_elements,h,norm,error,rate" and len(lines) == 5
    nodata = "[case]\ncase = burgers_riemann_2d\nn = 8\nk = 3\nmeshes = 8 16\n"
    assert cli.main(["converge", _write(tmp_path, nodata, "b.cfg")]) == cli.EXIT_CONFIG


def test_case_list(capsys):
    assert cli.main(["case-list"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 11


def test_readme_example_parses():
    from pathlib import Path
    text = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    block = text.split("### Run files")[1].split("```")[1]
    cfg = parse_config(block)
    assert cfg.case == "euler_sod" and cfg.meshes == (100, 200, 400) and cfg.prandtl == 0.5
