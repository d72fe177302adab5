"""End-to-end checks of the command-line interface.

Everything runs in-process through main(argv) so the suite stays fast;
one subprocess test covers the installed entry point.
"""

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pbergman.cli import (
    _parse_domain,
    _parse_p_grid,
    _parse_p_list,
    _parse_point,
    main,
)
from pbergman.domains import build_quadrature, make_domain
from pbergman.errors import ParameterError


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    rows = list(csv.reader(lines))
    return [dict(zip(rows[0], row)) for row in rows[1:]]


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def test_parse_domain_variants():
    assert _parse_domain("disc").dimension == 1
    assert _parse_domain("ball:2").dimension == 2
    assert _parse_domain("polydisc:2").dimension == 2
    assert _parse_domain("thullen:3").dimension == 2
    with pytest.raises(ParameterError):
        _parse_domain("torus")
    with pytest.raises(ParameterError):
        _parse_domain("ball:x")
    with pytest.raises(ParameterError):
        _parse_domain("disc:2")


def test_parse_point_shape_checks():
    z = _parse_point("0.3,-0.1", 1)
    assert z.shape == (1,) and z[0] == complex(0.3, -0.1)
    zz = _parse_point("0.1,0.2,0.3,0.4", 2)
    assert zz[1] == complex(0.3, 0.4)
    with pytest.raises(ParameterError):
        _parse_point("0.1,0.2,0.3", 2)
    with pytest.raises(ParameterError):
        _parse_point("a,b", 1)


def test_parse_p_grid():
    lin = _parse_p_grid("2:4:linear:3")
    assert lin == [2.0, 3.0, 4.0]
    geo = _parse_p_grid("2:8:geometric:3")
    assert geo == pytest.approx([2.0, 4.0, 8.0])
    with pytest.raises(ParameterError):
        _parse_p_grid("2:4:linear")
    with pytest.raises(ParameterError):
        _parse_p_grid("2:4:cubic:3")
    with pytest.raises(ParameterError):
        _parse_p_grid("2:4:linear:1")
    with pytest.raises(ParameterError):
        _parse_p_grid("-1:4:geometric:3")


def test_parse_p_list_rejects_junk():
    assert _parse_p_list("1,2.5") == [1.0, 2.5]
    with pytest.raises(ParameterError):
        _parse_p_list("")
    with pytest.raises(ParameterError):
        _parse_p_list("0.5")  # below the supported range


# --------------------------------------------------------------------------
# kernel / offdiag / metric
# --------------------------------------------------------------------------

def test_kernel_disc_closed_form(capsys):
    code, out, _ = run_cli(
        capsys, "kernel", "--p", "2,4", "--z", "0.4,0", "--reproducible"
    )
    assert code == 0
    rows = parse_csv(out)
    assert [r["p"] for r in rows] == ["2", "4"]
    oracle = 1.0 / (math.pi * (1.0 - 0.16) ** 2)
    for row in rows:
        assert float(row["kernel"]) == pytest.approx(oracle, rel=1e-9)
        assert row["converged"] == "true"
    assert not out.startswith("#")


def test_kernel_timestamp_line_by_default(capsys):
    code, out, _ = run_cli(capsys, "kernel", "--p", "2", "--z", "0,0", "--degree", "6")
    assert code == 0
    assert out.startswith("# generated ")


def test_offdiag_json_closed_form(capsys):
    code, out, _ = run_cli(
        capsys, "offdiag", "--p", "2", "--z", "0.2,0", "--w", "0.4,0",
        "--format", "json", "--reproducible",
    )
    assert code == 0
    data = json.loads(out)
    assert data["meta"]["command"] == "offdiag"
    assert data["meta"]["dimension"] == 1
    assert "generated" not in data["meta"]
    row = data["rows"][0]
    # minimizer at w=0.4 evaluated at z=0.2, and the two-point kernel
    m_oracle = (1.0 - 0.16) ** 2 / (1.0 - 0.08) ** 2
    k_oracle = 1.0 / (math.pi * (1.0 - 0.08) ** 2)
    assert row["m_re"] == pytest.approx(m_oracle, rel=1e-9)
    assert abs(row["m_im"]) < 1e-12
    assert row["kernel_re"] == pytest.approx(k_oracle, rel=1e-9)


def test_offdiag_point_count_mismatch(capsys):
    code, _, err = run_cli(
        capsys, "offdiag", "--p", "2", "--z", "0.1,0;0.2,0", "--w", "0.3,0"
    )
    assert code == 1
    assert "error:" in err


def test_metric_origin_oracle(capsys):
    code, out, _ = run_cli(
        capsys, "metric", "--p", "4", "--z", "0,0", "--X", "1,0", "--reproducible"
    )
    assert code == 0
    row = parse_csv(out)[0]
    assert float(row["metric"]) == pytest.approx(3.0 ** 0.25, rel=1e-9)
    assert row["converged"] == "true"
    # the maximizer cell round-trips as re,im pairs
    pairs = [tuple(map(float, c.split(","))) for c in row["maximizer"].split(";")]
    assert len(pairs) == 21


# --------------------------------------------------------------------------
# project
# --------------------------------------------------------------------------

def test_project_conjz_distance(capsys):
    code, out, _ = run_cli(
        capsys, "project", "--p", "4", "--input", "conjz", "--degree", "10",
        "--reproducible",
    )
    assert code == 0
    row = parse_csv(out)[0]
    assert row["input"] == "conjz:1"
    assert float(row["distance"]) == pytest.approx((math.pi / 3.0) ** 0.25, rel=1e-8)
    assert float(row["coefficient_norm"]) < 1e-7


def test_project_absz_constant_component(capsys):
    # at p = 2 the best approximation of |z| is its orthogonal projection,
    # a constant; the squared distance is pi/2 - 4 pi / 9 = pi/18
    code, out, _ = run_cli(
        capsys, "project", "--p", "2", "--input", "absz", "--degree", "10",
        "--reproducible",
    )
    assert code == 0
    row = parse_csv(out)[0]
    assert float(row["distance"]) == pytest.approx(math.sqrt(math.pi / 18.0), rel=1e-6)
    assert float(row["coefficient_norm"]) == pytest.approx(
        2.0 * math.sqrt(math.pi) / 3.0, rel=1e-6
    )


def test_project_sample_file(tmp_path, capsys):
    rule = build_quadrature(make_domain("disc"), 16, 36)
    values = np.conj(rule.nodes[:, 0])
    path = tmp_path / "samples.txt"
    path.write_text(
        "# conj z at the nodes\n"
        + "\n".join(f"{v.real:.17g},{v.imag:.17g}" for v in values)
        + "\n"
    )
    code, out, _ = run_cli(
        capsys, "project", "--p", "2", "--input", str(path),
        "--radial-order", "16", "--angular-order", "36", "--degree", "8",
        "--reproducible",
    )
    assert code == 0
    row = parse_csv(out)[0]
    assert float(row["distance"]) == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-8)


def test_project_sample_file_wrong_length(tmp_path, capsys):
    path = tmp_path / "short.txt"
    path.write_text("0.1,0.2\n0.3,0.4\n")
    code, _, err = run_cli(
        capsys, "project", "--p", "2", "--input", str(path), "--degree", "8"
    )
    assert code == 1
    assert "samples" in err


# --------------------------------------------------------------------------
# scan / levi
# --------------------------------------------------------------------------

def test_scan_metric_column_decreases(capsys):
    code, out, _ = run_cli(
        capsys, "scan", "--p-grid", "2:16:geometric:4", "--z", "0,0",
        "--X", "1,0", "--degree", "10", "--reproducible",
    )
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 4
    assert [float(r["p"]) for r in rows] == pytest.approx([2.0, 4.0, 8.0, 16.0])
    metric = [float(r["metric"]) for r in rows]
    assert all(a > b for a, b in zip(metric, metric[1:]))
    kernels = [float(r["kernel"]) for r in rows]
    assert max(kernels) - min(kernels) < 1e-8
    assert metric[0] == pytest.approx(math.sqrt(2.0), rel=1e-9)


def test_scan_offdiag_columns_split(capsys):
    code, out, _ = run_cli(
        capsys, "scan", "--p-grid", "2:4:linear:2", "--z", "0.2,0",
        "--w", "0.3,0.1", "--degree", "8", "--reproducible",
    )
    assert code == 0
    rows = parse_csv(out)
    assert "offdiag_m_re" in rows[0] and "offdiag_m_im" in rows[0]
    assert abs(float(rows[0]["offdiag_m_im"])) > 0.0


def test_levi_disc_origin(capsys):
    code, out, _ = run_cli(
        capsys, "levi", "--p", "2", "--z", "0,0", "--X", "1,0",
        "--angles", "32", "--reproducible",
    )
    assert code == 0
    row = parse_csv(out)[0]
    assert float(row["levi_log_kernel"]) == pytest.approx(2.0, abs=1e-6)


# --------------------------------------------------------------------------
# files, config, determinism
# --------------------------------------------------------------------------

def test_out_file_reproducible_bytes(tmp_path, capsys):
    target = tmp_path / "kernel.csv"
    args = (
        "kernel", "--p", "2", "--z", "0.3,0", "--degree", "8",
        "--out", str(target), "--reproducible",
    )
    assert run_cli(capsys, *args)[0] == 0
    first = target.read_bytes()
    assert run_cli(capsys, *args)[0] == 0
    assert target.read_bytes() == first
    assert not first.startswith(b"#")
    assert not list(tmp_path.glob(".*.tmp*"))


def test_config_file_supplies_defaults_and_required(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# quick-run defaults\n"
        "degree = 8\n"
        "format = json\n"
        "reproducible = true\n"
        "p = 2\n"
        "z = 0.3,0\n"
    )
    code, out, _ = run_cli(capsys, "kernel", "--config", str(cfg))
    assert code == 0
    data = json.loads(out)
    assert data["meta"]["degree"] == 8
    assert "generated" not in data["meta"]
    oracle = 1.0 / (math.pi * (1.0 - 0.09) ** 2)
    assert data["rows"][0]["kernel"] == pytest.approx(oracle, rel=1e-8)
    # a flag on the command line overrides the config value
    code, out, _ = run_cli(capsys, "kernel", "--config", str(cfg), "--z", "0,0")
    assert json.loads(out)["rows"][0]["kernel"] == pytest.approx(
        1.0 / math.pi, rel=1e-8
    )


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("degre = 8\n")
    code, _, err = run_cli(capsys, "kernel", "--config", str(cfg), "--p", "2", "--z", "0,0")
    assert code == 1
    assert "degre" in err


def test_config_file_rejects_bad_values(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("degree = eight\n")
    code, _, err = run_cli(capsys, "kernel", "--config", str(cfg), "--p", "2", "--z", "0,0")
    assert code == 1
    assert "integer" in err
    cfg.write_text("reproducible = maybe\n")
    code, _, err = run_cli(capsys, "kernel", "--config", str(cfg), "--p", "2", "--z", "0,0")
    assert code == 1
    assert "boolean" in err


def test_missing_config_file(capsys):
    code, _, err = run_cli(
        capsys, "kernel", "--config", "/nonexistent.cfg", "--p", "2", "--z", "0,0"
    )
    assert code == 1
    assert "does not exist" in err


def test_threads_preserve_row_order(capsys):
    args = ("kernel", "--p", "2,3", "--z", "0.1,0;0.2,0", "--degree", "8",
            "--reproducible")
    base = run_cli(capsys, *args)[1]
    threaded = run_cli(capsys, *args, "--threads", "2")[1]
    assert threaded == base


# --------------------------------------------------------------------------
# verify and plotting
# --------------------------------------------------------------------------

def test_verify_metric_suite(tmp_path, capsys):
    target = tmp_path / "records.csv"
    code, out, _ = run_cli(
        capsys, "verify", "metric", "--out", str(target), "--reproducible"
    )
    assert code == 0
    assert "checks passed" in out
    rows = parse_csv(target.read_text())
    assert rows and all(r["passed"] == "true" for r in rows)
    assert {"suite", "label", "margin", "note"} <= set(rows[0])


def test_verify_unknown_suite(capsys):
    with pytest.raises(SystemExit):
        # argparse rejects the choice before the suite runner sees it
        run_cli(capsys, "verify", "nonsense")


def test_scan_plot_renders_png(tmp_path, capsys):
    target = tmp_path / "scan.csv"
    code, _, _ = run_cli(
        capsys, "scan", "--p-grid", "2:4:linear:2", "--z", "0,0",
        "--degree", "8", "--out", str(target), "--plot", "--reproducible",
    )
    assert code == 0
    png = tmp_path / "scan.png"
    assert png.exists() and png.stat().st_size > 1000


def test_plot_without_out_warns(capsys):
    code, _, err = run_cli(
        capsys, "scan", "--p-grid", "2:4:linear:2", "--z", "0,0",
        "--degree", "8", "--plot", "--reproducible",
    )
    assert code == 0
    assert "--out" in err


def test_plot_note_on_kernel(capsys):
    code, _, err = run_cli(
        capsys, "kernel", "--p", "2", "--z", "0,0", "--degree", "6",
        "--plot", "--reproducible",
    )
    assert code == 0
    assert "no figure" in err


def test_degree_unsupported_by_angular_order(capsys):
    code, _, err = run_cli(
        capsys, "kernel", "--p", "2", "--z", "0,0",
        "--degree", "20", "--angular-order", "44",
    )
    assert code == 1
    assert "degree" in err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_installed_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "pbergman.cli", "kernel", "--p", "2",
         "--z", "0,0", "--degree", "6", "--reproducible"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "kernel" in proc.stdout.splitlines()[0]
