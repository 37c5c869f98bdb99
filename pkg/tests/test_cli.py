import struct

import numpy as np
import pytest

from dampwave import cli, io
from dampwave.errors import ParseError, ValidationError
from dampwave.spectral import Domain

MINIMAL = """\
[domain]
dim = 1
lengths = 3.14159265
modes = 32

[damping]
family = power
r = 2

[nonlinearity]
p = 3

[forcing]
e1 = 5e-1
"""

FAST = MINIMAL + """
[run]
dt = 1e-2
t_end = 1
stride = 10
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_parses():
    cfg = cli.parse_config(MINIMAL)
    assert cfg["domain"]["modes"] == 32
    assert cfg["run"]["dt"] == 1e-3
    m = cfg.model()
    assert m.domain.lengths == (3.14159265,)
    assert m.forcing[0] == 0.5 and m.damping.r == 2.0


def test_exponent_out_of_range():
    with pytest.raises(ValidationError) as info:
        cli.parse_config(MINIMAL.replace("r = 2", "r = 5"))
    assert info.value.key == "damping.r"


def test_r_above_m():
    cfg = cli.parse_config(MINIMAL.replace("r = 2", "r = 2\nm = 1"))
    with pytest.raises(ValidationError) as info:
        cfg.model()
    assert info.value.key == "damping.m"


def test_duplicate_key_reports_first_definition():
    text = MINIMAL.replace("modes = 32", "modes = 32\n# again\nmodes = 16")
    with pytest.raises(ParseError) as info:
        cli.parse_config(text)
    assert info.value.line == 6
    assert info.value.first_line == 4
    assert "line 4" in str(info.value)


@pytest.mark.parametrize("text, line", [
    ("[domain\n", 1),
    ("[nowhere]\n", 1),
    ("dim = 1\n", 1),
    ("[domain]\ndim 1\n", 2),
    ("[domain]\ndim =\n", 2),
    ("[domain]\n[domain]\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        cli.parse_config(text)
    assert info.value.line == line


@pytest.mark.parametrize("edit, key", [
    (("p = 3", "p = 3\nexponent = 2"), "nonlinearity.exponent"),
    (("modes = 32", "modes = many"), "domain.modes"),
    (("modes = 32", "modes = 32.5"), "domain.modes"),
    (("e1 = 5e-1", "e40 = 1"), "forcing.e40"),
    (("e1 = 5e-1", "x1 = 1"), "forcing.x1"),
    (("e1 = 5e-1", "e1 = nan"), "forcing.e1"),
    (("dim = 1\n", ""), "domain.dim"),
    (("[damping]", "[run]\ndt = -1\n[damping]"), "run.dt"),
])
def test_validation_errors(edit, key):
    with pytest.raises(ValidationError) as info:
        cli.parse_config(MINIMAL.replace(*edit))
    assert info.value.key == key


def test_numbers_and_lists():
    cfg = cli.parse_config(MINIMAL + "[experiment]\nradii = 1, 2.5e0, 1E1\nNs = 8, 16\n")
    assert cfg["experiment"]["radii"] == (1.0, 2.5, 10.0)
    assert cfg["experiment"]["Ns"] == (8, 16)
    cfg = cli.parse_config(MINIMAL.replace("dim = 1", "dim = 2").replace("e1 = 5e-1", "e1 = 1\ne2_3 = 2"))
    phi = cfg.model().forcing
    assert phi[0, 0] == 1.0 and phi[1, 2] == 2.0 and cfg.domain().lengths == (3.14159265,) * 2


def test_validate_writes_report_only(tmp_path):
    out = tmp_path / "v"
    assert cli.main(["validate", str(write(tmp_path, MINIMAL)), "--output-dir", str(out)]) == 0
    header, rows = io.read_csv(out / "assumptions.csv")
    assert header[0] == "assumption" and len(rows) == 5
    assert not list(out.glob("*.wdwv"))


def test_validate_failing_assumption_exits_2(tmp_path):
    text = MINIMAL.replace("r = 2", "r = 0").replace("p = 3", "p = 5")
    assert cli.main(["validate", str(write(tmp_path, text)), "--output-dir", str(tmp_path)]) == 2


def test_simulate_outputs(tmp_path):
    out = tmp_path / "s"
    assert cli.main(["simulate", str(write(tmp_path, FAST)), "--output-dir", str(out)]) == 0
    header, rows = io.read_csv(out / "energy.csv")
    assert tuple(header) == io.ENERGY_HEADER
    dom, times, u, v = io.read_trajectory(out / "trajectory.wdwv")
    assert len(rows) == len(times) == 11
    assert dom.modes == 32 and u.shape == (11, 32)
    np.testing.assert_allclose(u[0, :3], [1.0, -0.4, 0.2])
    assert [float(r[0]) for r in rows] == list(times)


def test_outputs_are_byte_reproducible(tmp_path):
    cfg = write(tmp_path, FAST + "initial = random\nradius = 2\nseed = 3\n")
    for name in ("a", "b"):
        assert cli.main(["simulate", str(cfg), "--output-dir", str(tmp_path / name)]) == 0
    for f in ("energy.csv", "trajectory.wdwv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_coarse_energy_audit_fails(tmp_path):
    cfg = write(tmp_path, MINIMAL + "[run]\ndt = 0.5\nt_end = 10\n")
    assert cli.main(["audit-energy", str(cfg), "--output-dir", str(tmp_path / "e")]) == 2
    header, rows = io.read_csv(tmp_path / "e" / "summary.csv")
    assert tuple(header) == io.SUMMARY_HEADER and rows[0][-1] == "fail"


@pytest.mark.parametrize("command", ["audit-energy", "audit-identity", "strong-audit",
                                     "equilibrium", "dependence", "converge"])
def test_audit_commands_pass(tmp_path, command):
    text = FAST.replace("dt = 1e-2", "dt = 2e-3") + "[experiment]\nperturb_sizes = 1e-2, 1e-3\nNs = 8, 16, 32\n"
    out = tmp_path / command
    assert cli.main([command, str(write(tmp_path, text)), "--output-dir", str(out)]) == 0
    header, rows = io.read_csv(out / "summary.csv")
    assert tuple(header) == io.SUMMARY_HEADER
    assert all(r[-1] == "pass" for r in rows)


def test_sweep_writes_one_file_per_run(tmp_path):
    text = FAST + "[experiment]\nradii = 1, 2\nsamples_per_radius = 2\nworkers = 2\n"
    out = tmp_path / "sw"
    assert cli.main(["sweep", str(write(tmp_path, text)), "--output-dir", str(out)]) in (0, 2)
    files = sorted(p.name for p in (out / "sweep").iterdir())
    assert files == ["R1_seed0.csv", "R1_seed1.csv", "R2_seed1000.csv", "R2_seed1001.csv"]
    header, rows = io.read_csv(out / "sweep.csv")
    assert tuple(header) == io.AUDIT_HEADER and len(rows) == 2


def test_decompose_command(tmp_path):
    text = FAST.replace("family = power\nr = 2", "family = plateau\nsigma0 = 0.5\nl = 10") \
        + "[experiment]\ncutoffs = 2, 4\noffsets = 1e-1, 1e-2\n"
    out = tmp_path / "d"
    assert cli.main(["decompose", str(write(tmp_path, text)), "--output-dir", str(out)]) == 0
    header, rows = io.read_csv(out / "decompose_n2.csv")
    assert header == ["t", "reconstruction_residual", "lemma53_ratio", "vn_energy"]
    assert len(rows) == 11
    _, summary = io.read_csv(out / "summary.csv")
    assert [r[0] for r in summary] == ["reconstruction_n2", "reconstruction_n4", "lemma53", "lemma54"]


def test_errors_exit_1(tmp_path, capsys):
    assert cli.main(["simulate", str(tmp_path / "missing.ini")]) == 1
    bad = write(tmp_path, MINIMAL.replace("r = 2", "r = 5"))
    assert cli.main(["simulate", str(bad)]) == 1
    assert "damping.r" in capsys.readouterr().err
    narrow = FAST.replace("family = power\nr = 2", "family = plateau\nl = 1") + "[experiment]\ncutoffs = 4\n"
    assert cli.main(["decompose", str(write(tmp_path, narrow)), "--output-dir", str(tmp_path)]) == 1
    assert cli.run("bogus", cli.parse_config(MINIMAL), tmp_path) == 1


def test_trajectory_binary_layout(tmp_path):
    d = Domain(2, (1.0, 2.0), 3)
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2, 3, 3)), rng.standard_normal((2, 3, 3))
    path = io.write_trajectory(tmp_path / "t.wdwv", d, [0.0, 0.5], u, v)
    raw = path.read_bytes()
    assert raw[:5] == b"WDWV1" and raw[5] == 2
    assert struct.unpack("<I", raw[6:10]) == (3,)
    assert struct.unpack("<2d", raw[10:26]) == (1.0, 2.0)
    assert struct.unpack("<I", raw[26:30]) == (2,)
    assert struct.unpack("<d", raw[30:38]) == (0.0,)
    assert len(raw) == 30 + 2 * 8 * (1 + 18)
    dom, t, u2, v2 = io.read_trajectory(path)
    assert dom.lengths == (1.0, 2.0) and list(t) == [0.0, 0.5]
    np.testing.assert_array_equal(u2, u)
    np.testing.assert_array_equal(v2, v)
    (tmp_path / "bad").write_bytes(b"XXXXX")
    with pytest.raises(ValueError):
        io.read_trajectory(tmp_path / "bad")
