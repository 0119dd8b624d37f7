import io
import textwrap

import pytest

from rffso import cli, relay
from rffso.cli import PRESETS, ConfigError, Scenario, SweepSpec, main, read_csv, run_sweep, validate_config
from rffso.relay import Modulation, RelaySystem, db_to_linear
from rffso.specfun import EvaluationError

HEADER = "scenario,snr_db,engine,metric,value,std_err,n_samples,seed"


def write(tmp_path, text, name="sweep.ini"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def test_minimal_config_defaults(tmp_path):
    spec = validate_config(write(tmp_path, "[scenario:a]\nk1 = 3\nalpha = 2.5\nbeta = 2.06\n"))
    assert spec.c_const == 1.0
    assert spec.samples == 10_000_000
    assert spec.max_terms == 35
    assert spec.balanced
    assert spec.scenarios == (Scenario("a", 3.0, 2.5, 2.06),)


def test_beta_above_alpha_rejected(tmp_path):
    p = write(tmp_path, "[scenario:a]\nk1 = 3\nalpha = 2.0\nbeta = 2.5\n")
    with pytest.raises(ConfigError) as exc:
        validate_config(p)
    (d,) = exc.value.diagnostics
    assert "alpha must exceed beta" in d.message
    assert d.line == 4


def test_negative_step_rejected(tmp_path):
    p = write(tmp_path, "[sweep]\nsnr_db_step = -2\n\n[scenario:a]\nk1 = 0\nalpha = 3\nbeta = 2\n")
    with pytest.raises(ConfigError) as exc:
        validate_config(p)
    assert [d.line for d in exc.value.diagnostics] == [2]
    assert "snr_db_step" in str(exc.value)


def test_all_problems_reported(tmp_path):
    p = write(
        tmp_path,
        """\
        [sweep]
        engines = closed_form, magic
        colour = blue

        [scenario:a]
        k1 = -1
        alpha = x
        beta = 2
        metric = outage

        [bogus]
        """,
    )
    with pytest.raises(ConfigError) as exc:
        validate_config(p)
    lines = [d.line for d in exc.value.diagnostics]
    assert lines == sorted(lines)
    assert {2, 3, 7, 11} <= set(lines)


def test_parse_error_has_line(tmp_path):
    p = write(tmp_path, "[sweep]\nsnr_db_step = 1\nthis is not a key\n")
    with pytest.raises(ConfigError) as exc:
        validate_config(p)
    assert exc.value.diagnostics[0].line == 3


def test_duplicate_key(tmp_path):
    p = write(tmp_path, "[sweep]\nseed = 1\nseed = 2\n[scenario:a]\nk1=0\nalpha=3\nbeta=2\n")
    with pytest.raises(ConfigError) as exc:
        validate_config(p)
    assert exc.value.diagnostics[0].line == 3


def test_outage_needs_threshold(tmp_path):
    p = write(tmp_path, "[scenario:a]\nk1 = 0\nalpha = 3\nbeta = 2\nmetric = outage\n")
    with pytest.raises(ConfigError, match="gamma_th_db"):
        validate_config(p)


def test_snr_grid():
    assert SweepSpec(snr_db_start=0, snr_db_stop=30, snr_db_step=5).snr_grid() == [0, 5, 10, 15, 20, 25, 30]
    assert SweepSpec(snr_db_start=0, snr_db_stop=1, snr_db_step=0.1).snr_grid()[-1] == 1.0


def small_spec(**kw):
    base = dict(
        snr_db_start=5.0,
        snr_db_stop=10.0,
        snr_db_step=5.0,
        engines=("quadrature", "closed_form"),
        scenarios=(
            Scenario("z_ser", 3.0, 2.5, 2.06),
            Scenario("a_out", 0.0, 2.04, 1.10, "outage", 5.0),
        ),
    )
    base.update(kw)
    return SweepSpec(**base)


def test_round_trip_and_order():
    buf = io.StringIO()
    assert run_sweep(small_spec(), buf) == 0
    text = buf.getvalue()
    assert text.splitlines()[0] == HEADER
    rows = read_csv(text)
    keys = [(r["scenario"], r["snr_db"], r["engine"]) for r in rows]
    assert keys == sorted(keys) and len(keys) == 8
    for r in rows:
        sys_ = RelaySystem.balanced(*(3.0, 2.5, 2.06) if r["scenario"] == "z_ser" else (0.0, 2.04, 1.10), r["snr_db"])
        if r["metric"] == "ser":
            want = (
                relay.aser_closed_form(Modulation(), sys_).value
                if r["engine"] == "closed_form"
                else relay.aser_quadrature(Modulation(), sys_)
            )
        else:
            th = db_to_linear(5.0)
            want = relay.outage_closed_form(th, sys_).value if r["engine"] == "closed_form" else relay.outage_quadrature(th, sys_)
        assert r["value"] == want  # bit-exact
        assert r["std_err"] is None and r["n_samples"] is None


def test_montecarlo_columns():
    spec = small_spec(engines=("montecarlo",), samples=20_000, seed=5, snr_db_stop=5.0)
    buf = io.StringIO()
    assert run_sweep(spec, buf) == 0
    rows = read_csv(buf.getvalue())
    assert all(r["n_samples"] == 20_000 and r["seed"] == 5 and r["std_err"] > 0 for r in rows)
    again = io.StringIO()
    run_sweep(spec, again)
    assert again.getvalue() == buf.getvalue()


def test_eval_failure_exit_code(monkeypatch):
    def boom(*a, **k):
        raise EvaluationError("no convergence")

    monkeypatch.setattr(relay, "aser_quadrature", boom)
    buf, err = io.StringIO(), io.StringIO()
    assert run_sweep(small_spec(), buf, err) == 2
    rows = read_csv(buf.getvalue())
    failed = [r for r in rows if r["scenario"] == "z_ser" and r["engine"] == "quadrature"]
    assert failed and all(r["value"] is None for r in failed)
    assert "no convergence" in err.getvalue()
    assert len(rows) == 8


def test_unwritable_destination(tmp_path):
    assert run_sweep(small_spec(), str(tmp_path / "missing" / "out.csv"), io.StringIO()) == 3


def test_main_exit_codes(tmp_path, capsys):
    good = write(tmp_path, "[sweep]\nsnr_db_start = 10\nsnr_db_stop = 10\nengines = closed_form\n[scenario:a]\nk1=3\nalpha=2.5\nbeta=2.06\n")
    out = tmp_path / "o.csv"
    assert main(["--config", str(good), "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == HEADER
    bad = write(tmp_path, "[scenario:a]\nk1=3\nalpha=2\nbeta=2.5\n", "bad.ini")
    assert main(["--config", str(bad)]) == 1
    assert "line 4" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "nope.ini")]) == 1
    assert main(["--preset", "fig3", "--engines", "magic", "--check"]) == 1
    assert main(["--preset", "fig3", "--samples", "0", "--check"]) == 1


def test_check_only(capsys):
    assert main(["--preset", "fig4", "--engines", "closed_form", "--max-terms", "50", "--check"]) == 0
    assert "5 scenario(s)" in capsys.readouterr().out


def test_max_terms_override(tmp_path, monkeypatch):
    seen = []
    real = relay.aser_closed_form

    def spy(mod, sys_, ctl, **kw):
        seen.append(ctl.max_outer_terms)
        return real(mod, sys_, ctl, **kw)

    monkeypatch.setattr(relay, "aser_closed_form", spy)
    cfg = write(tmp_path, "[sweep]\nsnr_db_start=20\nsnr_db_stop=20\nengines=closed_form\n[scenario:a]\nk1=0\nalpha=3\nbeta=2\n")
    assert main(["--config", str(cfg), "--max-terms", "12", "--out", str(tmp_path / "x.csv")]) == 0
    assert seen == [12]


def test_presets():
    fig2 = PRESETS["fig2"]
    assert {s.gamma_th_db for s in fig2.scenarios} == {0.0, 5.0}
    assert all(s.metric == "outage" for s in fig2.scenarios)
    assert (3.0, 2.50, 2.06) in {(s.k1, s.alpha, s.beta) for s in fig2.scenarios}
    fig3 = PRESETS["fig3"]
    assert {(s.alpha, s.beta) for s in fig3.scenarios if s.k1 == 3.0} == {(6.92, 6.52), (4.43, 4.39), (2.50, 2.06), (2.04, 1.10)}
    assert any(s.k1 == 0.0 for s in fig3.scenarios)
    fig4 = PRESETS["fig4"]
    assert sorted(s.k1 for s in fig4.scenarios) == [0, 2, 4, 6, 8]
    for spec in PRESETS.values():
        assert spec.snr_db_start == 0 and spec.snr_db_stop == 30 and spec.c_const == 1.0
        assert all(s.a_coef == 1.0 and s.b_coef == 1.0 for s in spec.scenarios)
