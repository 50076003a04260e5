import subprocess
import sys

import pytest

from stbcaber.cli import main, parse_config_text, parse_grid, UsageError
from stbcaber.errors import IntegrationError
from stbcaber.ggn import builtin_fit, read_fit_file
from stbcaber.output import SWEEP_HEADER

ETA = ["--channel", "eta-mu", "--eta", "0.5", "--mu", "1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sweep_csv_format(capsys):
    code, out, _ = run(capsys, "sweep", *ETA, "--nt", "2", "--nr", "2", "--snr-db", "0:10:5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "0.00000000000e+00"
    assert len(first[1].split("e")[0].replace(".", "").lstrip("-")) == 12
    assert first[3] == "" and first[4] == ""


def test_sweep_is_byte_identical_with_mc(capsys):
    argv = ["sweep", *ETA, "--snr-db", "0:10:5", "--method", "closed,quad,mc", "--mc-n", "20000",
            "--seed", "4"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    assert a.splitlines()[1].split(",")[3] != ""


def test_clamp_only_touches_probability_columns(capsys):
    argv = ["sweep", *ETA, "--noise-a", "0.5", "--snr-db", "0:4:2"]
    _, raw, _ = run(capsys, *argv)
    _, clamped, _ = run(capsys, *argv, "--clamp")
    raw_rows = [r.split(",") for r in raw.splitlines()[1:]]
    cl_rows = [r.split(",") for r in clamped.splitlines()[1:]]
    assert float(raw_rows[0][1]) > 1.0          # the a=0.5 amplitudes sum to ~657
    assert float(cl_rows[0][1]) == 1.0
    assert [r[5] for r in raw_rows] == [r[5] for r in cl_rows]


def test_aber_single_point(capsys):
    code, out, _ = run(capsys, "aber", "--channel", "rayleigh", "--snr-db", "10")
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert float(row[1]) == pytest.approx(0.0233293, rel=1e-5)


def test_aber_rejects_grid(capsys):
    code, _, err = run(capsys, "aber", *ETA, "--snr-db", "0:10:5")
    assert code == 2 and "single" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nchannel = kappa-mu-shadowed\nkappa=1\nmu=1\nm=2  # inline\n"
                   "snr_db=0:4:2\nmod=qpsk\n")
    _, from_file, _ = run(capsys, "sweep", "--config", str(cfg))
    assert len(from_file.splitlines()) == 4
    _, overridden, _ = run(capsys, "sweep", "--config", str(cfg), "--snr-db", "0:2:2")
    assert len(overridden.splitlines()) == 3
    assert overridden.splitlines()[1] == from_file.splitlines()[1]


def test_preset_writes_one_csv_per_curve(tmp_path, capsys):
    code, _, _ = run(capsys, "sweep", "--config", "fig1", "--out", str(tmp_path / "fig1"))
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "fig1").iterdir())
    assert names == ["bpsk_a1.csv", "bpsk_a2.csv", "mqam-rect16_a1.csv", "mqam-rect16_a2.csv",
                     "qpsk_a1.csv", "qpsk_a2.csv"]


def test_multi_curve_needs_out(capsys):
    code, _, err = run(capsys, "sweep", "--config", "fig3")
    assert code == 2 and "--out" in err


@pytest.mark.parametrize("argv", [
    ["sweep", *ETA, "--snr-db", "10:0:1"],
    ["sweep", *ETA, "--snr-db", "0:10:0"],
    ["sweep", "--channel", "eta-mu", "--mu", "1"],
    ["sweep", *ETA, "--mod", "mqam-rect", "--mod-order", "8"],
    ["sweep", *ETA, "--config", "missing.cfg"],
    ["sweep", *ETA, "--noise-a", "1.7", "--fit-file", "__nofile__"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("stbc-aber:")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--scaling", "weird"])
    assert info.value.code == 2


def test_degenerate_channel_is_a_configuration_error(capsys):
    code, _, err = run(capsys, "sweep", "--channel", "eta-mu", "--eta", "1", "--mu", "1")
    assert code == 2 and "kappa" in err


def test_numerical_failure_exit_1(capsys, monkeypatch):
    import stbcaber.aber as aber

    def boom(*args, **kwargs):
        raise IntegrationError("budget exhausted", value=0.1, abserr=1.0)

    monkeypatch.setattr(aber, "aber_quadrature", boom)
    code, _, err = run(capsys, "sweep", *ETA, "--snr-db", "0:10:5")
    assert code == 1
    assert "numerical failure" in err and "0 dB" in err


def test_fit_refit_beats_table(tmp_path, capsys):
    out = tmp_path / "fit.csv"
    assert run(capsys, "fit", "--a", "2", "--out", str(out))[0] == 0
    fit = read_fit_file(out)[2.0]
    assert fit.max_abs_err <= builtin_fit(2.0).max_abs_err


def test_fit_file_used_by_sweep(tmp_path, capsys):
    out = tmp_path / "fit.csv"
    run(capsys, "fit", "--a", "1.7", "--out", str(out))
    code, csv_text, _ = run(capsys, "sweep", *ETA, "--noise-a", "1.7", "--fit-file", str(out),
                            "--snr-db", "0:10:10")
    assert code == 0 and len(csv_text.splitlines()) == 3


def test_fit_builtin_export(capsys):
    code, out, _ = run(capsys, "fit", "--builtin")
    assert code == 0
    rows = out.splitlines()
    assert len(rows) == 6 and rows[4].startswith("2,0.099,0.157")


def test_fit_needs_shape(capsys):
    assert run(capsys, "fit")[0] == 2


def test_pdf_table(capsys):
    code, out, _ = run(capsys, "pdf", "--channel", "rayleigh", "--snr-db", "0", "--points", "4",
                       "--gamma-max", "2")
    assert code == 0
    rows = [r.split(",") for r in out.splitlines()]
    assert rows[0] == ["gamma", "pdf"]
    assert float(rows[2][0]) == 1.0
    assert float(rows[2][1]) == pytest.approx(0.36787944117, rel=1e-10)


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "4,6")
    assert code == 0
    assert "2/2 criteria passed" in out


def test_parse_grid():
    assert parse_grid("0:30:5") == (0, 5, 10, 15, 20, 25, 30)
    assert parse_grid("0:1:0.1")[-1] == 1.0
    assert parse_grid("3") == (3.0,)
    with pytest.raises(UsageError):
        parse_grid("1:2")


def test_parse_config_errors():
    assert parse_config_text("mu = 2\nclamp = yes\n") == {"mu": 2.0, "clamp": True}
    with pytest.raises(UsageError):
        parse_config_text("colour = red")
    with pytest.raises(UsageError):
        parse_config_text("just text")
    with pytest.raises(UsageError):
        parse_config_text("nt = two")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stbcaber", "aber", "--channel", "rayleigh",
                          "--snr-db", "10"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.startswith("snr_db,")


@pytest.mark.parametrize("preset", ["fig1", "fig2", "fig3", "fig4"])
def test_presets_finish_quickly_with_ordered_curves(preset, tmp_path, capsys):
    import time
    t0 = time.perf_counter()
    assert run(capsys, "sweep", "--config", preset, "--out", str(tmp_path))[0] == 0
    assert time.perf_counter() - t0 < 60.0
    for a in ("1", "2"):
        bpsk = [float(r.split(",")[1]) for r in (tmp_path / f"bpsk_a{a}.csv").read_text().splitlines()[1:]]
        qam = [float(r.split(",")[1]) for r in (tmp_path / f"mqam-rect16_a{a}.csv").read_text().splitlines()[1:]]
        assert all(x > y for x, y in zip(bpsk, bpsk[1:]))
        assert all(b <= q for b, q in zip(bpsk, qam))
