import csv

import numpy as np
import pytest

from perihom import cli

SMALL = """
[geometry]
centers = -0.18+0.2j, 0.33-0.34j, 0.33+0.35j, -0.18-0.2j
radii = 0.145

[matrix]
trapezoid = -2, 2, 4.5, 13.5

[inclusion]
trapezoid = -2, 2, 50, 150

[sweep]
samples = 21
cells = -3:3, -3:3
equivalence_tol = 1e-3

[verify]
grid = 64
residual_grids = 32, 64
residual_ratio = 0, 100
field_margin = 0.05
field_tol = 1
tensor_tol = 0.1
"""

HOMOGENEOUS = """
[geometry]
centers = 0.1j
radii = 0.2

[matrix]
values = 4.5

[inclusion]
values = 4.5

[sweep]
samples = 5
shifts = -5, 5

[verify]
grid = 32
residual_grids = 16, 32
"""


def run(tmp_path, *args, config=None, text=None):
    if text is not None:
        config = tmp_path / "run.cfg"
        config.write_text(text)
    return cli.main([args[0], "--config", str(config), "--out", str(tmp_path / "out"), *args[1:]])


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_solve_reference(tmp_path, capsys):
    assert run(tmp_path, "solve", config="reference") == 0
    rows = dict(read(tmp_path / "out" / "summary.csv")[1:])
    assert abs(float(rows["L11"]) - 1.524131) < 1e-3
    assert abs(float(rows["L22"]) - 1.650632) < 1e-3
    assert float(rows["residual"]) <= 1e-6
    assert "d_x" in capsys.readouterr().out


def test_solve_empty_with_field(tmp_path):
    assert run(tmp_path, "solve", "--grid", "4", config="empty") == 0
    rows = dict(read(tmp_path / "out" / "summary.csv")[1:])
    assert float(rows["L11"]) == 1.0 and float(rows["L22"]) == 1.0
    assert float(rows["d_x"]) == 1.0 and float(rows["d_y"]) == 0.0
    field = read(tmp_path / "out" / "field.csv")
    assert field[0] == ["x", "y", "region", "u", "u_x", "u_y"]
    assert len(field) == 17
    for x, _, _, u, ux, uy in field[1:]:
        assert float(u) == pytest.approx(float(x), abs=1e-9)
        assert float(ux) == 1.0 and float(uy) == 0.0


def test_solve_fixed_low_order_exits_one(tmp_path, capsys):
    text = load_text("reference") + "\n"
    text = text.replace("adaptive = yes", "adaptive = no").replace("order = 6", "order = 2")
    assert run(tmp_path, "solve", text=text) == 1
    assert "above tolerance" in capsys.readouterr().err


def load_text(name):
    from perihom.config import bundled_path

    return bundled_path(name).read_text()


def test_sweep_and_followups(tmp_path, capsys):
    assert run(tmp_path, "sweep", "--svg", "--check-equivalence", text=SMALL) == 0
    out = tmp_path / "out"
    curve = read(out / "curve.csv")
    assert curve[0] == cli.CURVE_COLUMNS
    T = np.array([float(r[0]) for r in curve[1:]])
    assert np.all(np.diff(T) > 0)
    cells = read(out / "cells.csv")
    assert cells[0][:2] == ["m1", "m2"]
    assert (out / "resistance_diagonal.svg").read_text().startswith("<?xml")
    assert "equivalence: max discrepancy" in capsys.readouterr().out
    # every float carries at most 9 significant digits and lines end in LF
    raw = (out / "curve.csv").read_bytes()
    assert b"\r" not in raw
    assert all(len(v.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 9 for v in curve[1][1:])

    assert run(tmp_path, "bounds", "--curve", str(out / "curve.csv"), text=SMALL) == 0
    assert read(out / "bounds.csv")[1][-1] == "yes"
    assert run(tmp_path, "compare", "--curve", str(out / "curve.csv"), text=SMALL) == 0
    assert read(out / "delta.csv")[0][0] == "avg_T"


def test_sweep_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL)
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(b)]) == 0
    assert (a / "curve.csv").read_bytes() == (b / "curve.csv").read_bytes()


def test_equivalence_breach_exits_two(tmp_path, capsys):
    text = SMALL.replace("equivalence_tol = 1e-3", "equivalence_tol = 1e-9")
    assert run(tmp_path, "sweep", "--check-equivalence", text=text) == 2
    assert "equivalence discrepancy above" in capsys.readouterr().err


def test_cells_flag(tmp_path):
    assert run(tmp_path, "sweep", "--cells", "-2:2", "-2:2", text=SMALL) == 0
    cells = read(tmp_path / "out" / "cells.csv")
    assert {int(r[0]) for r in cells[1:]} <= set(range(-2, 3))


def test_single_axis_cells_exit_one(tmp_path, capsys):
    assert run(tmp_path, "sweep", "--cells", "-2:2", "0:0", text=SMALL) == 1
    assert "fewer than two" in capsys.readouterr().err


def test_corrupted_curve_exits_two(tmp_path, capsys):
    assert run(tmp_path, "sweep", text=SMALL) == 0
    rows = read(tmp_path / "out" / "curve.csv")
    header = rows[0]
    for r in rows[1:]:
        for name in ("L11", "L12", "L21", "L22"):
            j = header.index(name)
            r[j] = repr(10 * float(r[j]))
    bad = tmp_path / "bad.csv"
    with open(bad, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    capsys.readouterr()
    assert run(tmp_path, "bounds", "--curve", str(bad), text=SMALL) == 2
    assert "m21 = -" in capsys.readouterr().err


def test_homogeneous_commands(tmp_path):
    assert run(tmp_path, "sweep", text=HOMOGENEOUS) == 0
    curve = read(tmp_path / "out" / "curve.csv")
    values = np.array([[float(v) for v in r[1:]] for r in curve[1:]])
    assert np.abs(values - values[0]).max() < 1e-12
    assert values[0, 4] == 4.5 and values[0, 7] == 4.5
    assert run(tmp_path, "bounds", text=HOMOGENEOUS) == 0
    rows = read(tmp_path / "out" / "bounds.csv")
    header = rows[0]
    for r in rows[1:]:
        for name in ("m11", "m12"):
            assert abs(float(r[header.index(name)])) < 1e-8
        assert r[header.index("hs_note")] == "degenerate"
    assert run(tmp_path, "compare", text=HOMOGENEOUS) == 0
    delta = read(tmp_path / "out" / "delta.csv")
    assert max(abs(float(v)) for r in delta[1:] for v in r[1:]) < 1e-12
    assert run(tmp_path, "verify", text=HOMOGENEOUS) == 0


def test_verify_breach_exits_two(tmp_path, capsys):
    text = SMALL.replace("tensor_tol = 0.1", "tensor_tol = 1e-9")
    assert run(tmp_path, "verify", text=text) == 2
    out = capsys.readouterr().out
    assert "FAIL" in out and "FD tensor" in out


def test_verify_small_grid_passes(tmp_path):
    assert run(tmp_path, "verify", text=SMALL) == 0
    assert read(tmp_path / "out" / "verify.csv")[0] == ["check", "value", "limit", "status"]


def test_bad_config_exits_one(tmp_path, capsys):
    assert run(tmp_path, "solve", text="[geometry]\ncenters = 0\nradii = x\n[matrix]\nvalues = 1\n") == 1
    assert "line 3" in capsys.readouterr().err
    assert run(tmp_path, "solve", config=tmp_path / "missing.cfg") == 1


def test_nonproportional_exits_one(tmp_path, capsys):
    text = SMALL.replace("trapezoid = -2, 2, 50, 150", "values = 150")
    assert run(tmp_path, "sweep", text=text) == 1
    assert "constant multiple" in capsys.readouterr().err


def test_bad_cells_argument(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "sweep", "--cells", "3:1", "0:0", text=SMALL)
    assert exc.value.code == 2
