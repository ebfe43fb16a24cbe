import io
import json
from pathlib import Path

import pytest

from lmoment.cache import MAGIC, LValueCache
from lmoment.cli import MOMENTS_HEADER, SCAN_HEADER, main
from lmoment.config import ConfigError, RunConfig, load_config
from lmoment.lfun import EvaluationContext

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for var in ("LMOMENT_CACHE_DIR", "LMOMENT_PARALLELISM", "LMOMENT_K", "LMOMENT_QUAD_TOL"):
        monkeypatch.delenv(var, raising=False)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def assert_csv_matches(text, golden_name):
    got = [l for l in text.splitlines()]
    want = (GOLDEN / golden_name).read_text().splitlines()
    assert len(got) == len(want)
    assert got[0] == want[0]
    for g, w in zip(got[1:], want[1:]):
        if g.startswith("#"):
            g, w = g.split(" ", 2)[2].split(), w.split(" ", 2)[2].split()
        else:
            g, w = g.split(","), w.split(",")
        assert len(g) == len(w)
        for a, b in zip(g, w):
            if "=" in a:
                (ka, a), (kb, b) = a.split("="), b.split("=")
                assert ka == kb
            if a == b:
                continue
            assert float(a) == pytest.approx(float(b), rel=1e-12)


def test_moments_golden():
    code, text = run("moments", "--q", "5", "--k", "0.5", "--parallelism", "1")
    assert code == 0
    assert text.splitlines()[0] == MOMENTS_HEADER == "q,phi,k,M_k,ratio"
    assert_csv_matches(text, "moments_q5_k0.5.csv")


def test_scan_golden_and_summary():
    code, text = run("scan", "--q-min", "3", "--q-max", "8", "--k", "1", "--parallelism", "1")
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == SCAN_HEADER == "q,phi,M_k,ratio"
    assert lines[-1].startswith("# summary ")
    assert [int(l.split(",")[0]) for l in lines[1:-1]] == list(range(3, 9))
    assert_csv_matches(text, "scan_3_8_k1.csv")


def test_group_golden():
    code, text = run("group", "--q", "8")
    assert code == 0
    assert text == (GOLDEN / "group_q8.csv").read_text()


def test_scan_primes_filter():
    code, text = run("scan", "--q-min", "10", "--q-max", "30", "--primes", "--parallelism", "1")
    assert code == 0
    assert [int(l.split(",")[0]) for l in text.splitlines()[1:-1]] == [11, 13, 17, 19, 23, 29]


def test_moments_q2_empty_row(caplog):
    code, text = run("moments", "--q", "2", "--k", "1")
    assert code == 0
    assert text.splitlines() == [MOMENTS_HEADER, "2,1,1,NA,NA"]


def test_moments_json_length_and_roundtrip():
    code, text = run("moments", "--q", "101", "--k", "1", "--format", "json")
    assert code == 0
    obj = json.loads(text)
    assert len(obj["per_character"]) == 99
    assert obj["M_k"] == pytest.approx(sum(obj["per_character"]), rel=1e-13)
    assert json.loads(json.dumps(obj)) == obj


def test_params_json():
    code, text = run("params", "--q", "101", "--k", "0.5", "--mode", "unconditional", "--v", "2")
    assert code == 0
    obj = json.loads(text)
    assert obj["delta"] == pytest.approx(0.05)
    assert obj["v"] == 2
    assert obj["kappa"] == pytest.approx(10.0)


def test_integral_single_and_all():
    code, text = run("integral", "--kind", "K", "--q", "5", "--sigma", "1.0", "--char", "1", "--format", "json")
    assert code == 0
    one = json.loads(text)
    code, text = run("integral", "--kind", "K", "--q", "5", "--sigma", "1.0", "--format", "json")
    allc = json.loads(text)
    assert [c["index"] for c in allc["per_character"]] == [1, 2, 3]
    assert allc["per_character"][0]["value"] == pytest.approx(one["aggregate"], rel=1e-7)


def test_verify_suite_exit_codes():
    code, text = run("verify", "--suite", "gauss")
    assert code == 0
    obj = json.loads(text)
    assert obj["suite"] == "gauss" and obj["pass"] is True
    assert set(obj["cases"][0]) >= {"id", "lhs", "rhs", "rel_err", "pass"}
    code, _ = run("verify", "--suite", "nonsense")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["moments", "--q", "5", "--k", "-1"],
    ["moments"],
    ["scan", "--q-min", "10", "--q-max", "5"],
    ["integral", "--kind", "Q", "--q", "5", "--sigma", "1"],
    ["integral", "--kind", "J", "--q", "5", "--sigma", "1", "--char", "9"],
    ["params", "--q", "101", "--k", "0.3", "--mode", "unconditional"],
    ["moments", "--q", "5", "--quad-tol", "0"],
])
def test_invalid_arguments_exit_2(argv):
    assert run(*argv)[0] == 2


def test_computation_failure_exit_1(capsys):
    # an unreachable tolerance is a computation failure, not a usage error
    code, _ = run("integral", "--kind", "J", "--q", "5", "--sigma", "0.5", "--quad-tol", "1e-30")
    assert code == 1
    assert "computation failed" in capsys.readouterr().err


def test_cache_transparency(tmp_path):
    plain = run("moments", "--q", "30", "--k", "0.7", "--format", "json")[1]
    cold = run("moments", "--q", "30", "--k", "0.7", "--format", "json", "--cache-dir", str(tmp_path))[1]
    assert (tmp_path / "L_30.txt").exists()
    warm = run("moments", "--q", "30", "--k", "0.7", "--format", "json", "--cache-dir", str(tmp_path))[1]
    assert plain == cold == warm


def test_cache_hit_is_bit_identical(tmp_path):
    cache = LValueCache(tmp_path)
    ctx = EvaluationContext()
    vals = [complex(1 / 3, -2 / 7), complex(1e-300, 5e300)]
    cache.store(5, 0.5, ctx, vals)
    got = cache.lookup(5, 0.5, ctx)
    assert got is None  # mod 5 has three non-principal characters
    cache.store(5, 0.5, ctx, vals + [complex(0.1, 0.2)])
    got = cache.lookup(5, 0.5, ctx)
    assert [complex(x) for x in got] == vals + [complex(0.1, 0.2)]
    other = EvaluationContext(em_terms=20)
    assert cache.lookup(5, 0.5, other) is None


def test_corrupted_cache_ignored_and_rebuilt(tmp_path):
    (tmp_path / "L_13.txt").write_text("garbage\nmore garbage\n")
    plain = run("moments", "--q", "13", "--k", "1", "--format", "json")[1]
    cached = run("moments", "--q", "13", "--k", "1", "--format", "json", "--cache-dir", str(tmp_path))[1]
    assert plain == cached
    assert (tmp_path / "L_13.txt").read_text().startswith(f"{MAGIC} q=13")
    assert not list(tmp_path.glob(".L_*"))


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nk = 0.25\nquad_tol=1e-5\nparallelism = 3\nt_max = 100\n")
    env = {"LMOMENT_K": "0.5", "LMOMENT_PARALLELISM": "2"}
    cfg = load_config({"k": 0.75, "parallelism": None}, cfg_file, env)
    assert cfg.k == 0.75
    assert cfg.parallelism == 2
    assert cfg.quad_tol == 1e-5
    assert cfg.t_max == 100.0
    assert cfg.identity_tol == RunConfig().identity_tol


def test_config_env_cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("LMOMENT_CACHE_DIR", str(tmp_path))
    code, _ = run("moments", "--q", "7")
    assert code == 0
    assert (tmp_path / "L_7.txt").exists()


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig(mode="unconditional", k=0.3, v=3)
    assert RunConfig(mode="unconditional", k=0.5, v=2).v == 2
    with pytest.raises(ConfigError):
        RunConfig(parallelism=0)
    bad = tmp_path / "bad.cfg"
    bad.write_text("no_such_key = 1\n")
    with pytest.raises(ConfigError):
        load_config({}, bad, {})
    assert run("moments", "--q", "5", "--config", str(bad))[0] == 2
