import numpy as np
import pytest

from sandwichqr import __version__
from sandwichqr.cli import main


@pytest.fixture(scope="module")
def sim_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "model1.csv"
    rc = main(["simulate", "--model", "1", "--tau", "0.5", "--n", "80",
               "--seed", "7", "--out", str(path)])
    assert rc == 0
    return path


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == __version__


def test_simulate_writes_replayable_file(sim_csv):
    text = sim_csv.read_text()
    assert text.startswith("# seed=7\n# model=1\n# tau=0.5\n# n=80\n")
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert header == "y,x1,x2"
    assert len(text.splitlines()) == 4 + 1 + 80  # comments, header, rows


def test_simulate_stdout_and_generated_seed(capsys):
    rc = main(["simulate", "--model", "2", "--tau", "0.25", "--n", "5"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "(generated; pass --seed" in out
    assert "y,x1,x2" in out
    data_lines = [l for l in out.splitlines()
                  if l and not l.startswith(("#", "seed", "y,"))]
    assert len(data_lines) == 5


def test_simulate_rejects_bad_args(capsys):
    assert main(["simulate", "--model", "1", "--tau", "2.0", "--n", "5"]) == 1
    assert "error[args]" in capsys.readouterr().err
    assert main(["simulate", "--model", "1", "--tau", "0.5", "--n", "0"]) == 1
    assert "error[args]" in capsys.readouterr().err


def test_fit_all_methods(sim_csv, capsys):
    rc = main(["fit", str(sim_csv), "--tau", "0.5", "--seed", "3",
               "--burn-in", "200", "--draws", "200", "--bootstrap-b", "100"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "n=80 p=3 tau=0.5" in out
    for tag in ("[qr]", "[ald]", "[slqr]", "[slba]"):
        assert tag in out
    assert "sandwich covariance Sigma_n:" in out
    assert "generated" not in out  # explicit seed, no seed banner


def test_fit_method_subset(sim_csv, capsys):
    rc = main(["fit", str(sim_csv), "--methods", "qr", "--seed", "3",
               "--bootstrap-b", "100"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "[qr]" in out
    assert "[ald]" not in out and "[slba]" not in out


def test_fit_chain_out(sim_csv, tmp_path, capsys):
    chain_path = tmp_path / "chain.csv"
    rc = main(["fit", str(sim_csv), "--methods", "ald", "--seed", "3",
               "--burn-in", "150", "--draws", "120",
               "--chain-out", str(chain_path)])
    assert rc == 0
    assert f"chain written to {chain_path}" in capsys.readouterr().out
    lines = chain_path.read_text().splitlines()
    assert lines[0] == "beta1,beta2,beta3,sigma"
    assert len(lines) == 1 + 120
    arr = np.genfromtxt(str(chain_path), delimiter=",", names=True)
    assert arr.shape == (120,)


def test_fit_error_paths(sim_csv, tmp_path, capsys):
    assert main(["fit", str(tmp_path / "missing.csv")]) == 1
    assert "error[load-data]" in capsys.readouterr().err

    assert main(["fit", str(sim_csv), "--tau", "1.5"]) == 1
    assert "error[args]" in capsys.readouterr().err

    assert main(["fit", str(sim_csv), "--methods", "qr,magic"]) == 1
    assert "error[args]" in capsys.readouterr().err

    assert main(["fit", str(sim_csv), "--scale", "cauchy:1"]) == 1
    assert "error[args]" in capsys.readouterr().err

    assert main(["fit", str(sim_csv), "--scale", "gamma:2"]) == 1
    assert "bad --scale" in capsys.readouterr().err

    junk = tmp_path / "junk.csv"
    junk.write_text("y\n1.0\n")
    assert main(["fit", str(junk)]) == 1
    assert "error[load-data]" in capsys.readouterr().err


def test_fit_prior_file(sim_csv, tmp_path, capsys):
    prior = tmp_path / "prior.cfg"
    prior.write_text("mean = 0, 0, 0\nvariance = 50, 50, 50\n")
    rc = main(["fit", str(sim_csv), "--methods", "ald", "--seed", "3",
               "--burn-in", "150", "--draws", "120",
               "--prior", f"file:{prior}"])
    assert rc == 0
    assert "[ald]" in capsys.readouterr().out

    short = tmp_path / "short.cfg"
    short.write_text("mean = 0, 0\nvariance = 1, 1\n")
    assert main(["fit", str(sim_csv), "--methods", "ald",
                 "--prior", f"file:{short}"]) == 1
    assert "error[prior]" in capsys.readouterr().err

    assert main(["fit", str(sim_csv), "--methods", "ald",
                 "--prior", f"file:{tmp_path / 'nope.cfg'}"]) == 1
    assert "error[prior]" in capsys.readouterr().err


def test_experiment_from_config(tmp_path, capsys):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("models = 2\ntaus = 0.5\nn = 50\nreps = 2\n"
                   "methods = ald,slba\nburn_in = 150\nn_draws = 150\n"
                   "master_seed = 5\n")
    out_csv = tmp_path / "report.csv"
    out_md = tmp_path / "report.md"
    rc = main(["experiment", "--config", str(cfg),
               "--out-csv", str(out_csv), "--out-md", str(out_md)])
    assert rc == 0
    out = capsys.readouterr().out
    assert f"wrote {out_csv} and {out_md}" in out
    assert out_csv.read_text().startswith(
        "# master_seed=5 reps=2 n=50 level=0.95\n"
        "model,tau,method,coefficient,cov_pct,len,mc_se_cov\n")
    assert out_md.read_text().startswith("| model | tau | alpha ald |")
    assert "| 2 | 0.5 | (" in out  # table echoed to stdout


def test_experiment_flag_overrides_and_generated_seed(tmp_path, capsys):
    out_csv = tmp_path / "r.csv"
    out_md = tmp_path / "r.md"
    rc = main(["experiment", "--models", "2", "--taus", "0.5", "--n", "50",
               "--reps", "1", "--methods", "ald", "--burn-in", "120",
               "--draws", "120", "--out-csv", str(out_csv),
               "--out-md", str(out_md)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "(generated; pass --seed" in out
    seed = int(out.split("seed: ")[1].split(" ")[0])
    assert f"# master_seed={seed} " in out_csv.read_text()


def test_experiment_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("modles = 1\n")
    assert main(["experiment", "--config", str(cfg),
                 "--out-csv", str(tmp_path / "a.csv"),
                 "--out-md", str(tmp_path / "a.md")]) == 1
    assert "error[config]" in capsys.readouterr().err

    assert main(["experiment", "--config", str(tmp_path / "none.cfg"),
                 "--out-csv", str(tmp_path / "b.csv"),
                 "--out-md", str(tmp_path / "b.md")]) == 1
    assert "error[load-config]" in capsys.readouterr().err


def test_validate_subcommand(capsys):
    rc = main(["validate"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "PASS" in out
    assert "FAIL" not in out
