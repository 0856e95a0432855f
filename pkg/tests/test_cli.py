import io
import json

import pytest

from coarselab.cli import EXIT_HORIZON, EXIT_OK, EXIT_USAGE, build_parser, read_config, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_growth_report_envelope():
    code, out, _ = call("growth", "--group", "free(2)", "--max-radius", "3")
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["schema"] == "coarselab.growth/1" and rep["spec"] == "free(2)"
    assert rep["generators"] == ["a", "b"] and rep["version"]
    assert rep["result"]["counts"] == [1, 5, 17, 53]
    # sorted keys and no timestamps: identical reruns
    assert call("growth", "--group", "free(2)", "--max-radius", "3")[1] == out
    assert list(rep) == sorted(rep)


def test_usage_errors_exit_1():
    assert call()[0] == EXIT_USAGE
    assert call("bogus")[0] == EXIT_USAGE
    assert call("bigons", "find", "--group", "free(2)", "--radius", "4")[0] == EXIT_USAGE   # missing --x
    code, _, err = call("growth", "--group", "free(2", "--max-radius", "2")
    assert code == EXIT_USAGE and "free(2" in err


def test_horizon_errors_exit_2():
    code, _, err = call("bigons", "find", "--group", "abelian(2)", "--radius", "3", "--x", "a^3",
                        "-L", "2", "-s", "1", "-C", "2")
    assert code == EXIT_HORIZON and "[bigons]" in err


def test_precondition_errors_name_the_module():
    code, _, err = call("divergence", "rel", "--group", "abelian(2)", "--radius", "4",
                        "--a", "1", "--b", "a", "--c", "1")
    assert code == EXIT_USAGE and "[divergence]" in err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\ngroup = abelian(2)\nradius = 6\nmax_radius = 2\n")
    assert read_config(str(cfg))["group"] == "abelian(2)"
    code, out, _ = call("--config", str(cfg), "growth")
    assert json.loads(out)["result"]["counts"] == [1, 5, 13]
    code, out, _ = call("--config", str(cfg), "growth", "--max-radius", "1")
    assert json.loads(out)["result"]["counts"] == [1, 5]
    args = build_parser(read_config(str(cfg))).parse_args(["bigons", "count"])
    assert args.group == "abelian(2)" and args.radius == 6


def test_global_flags_after_subcommand(tmp_path):
    dest = tmp_path / "out.csv"
    code, out, _ = call("bigons", "count", "--group", "free(2)", "--radius", "6", "-L", "2", "-s", "1",
                        "-C", "1", "--exact", "--csv", "--workers", "1", "--out", str(dest))
    assert code == EXIT_OK and out == ""
    lines = dest.read_text().splitlines()
    assert lines[0] == "n,count,sphere_count"
    assert json.loads(lines[-1][2:])["verdict"] == "none-found"


def test_witness_roundtrip(tmp_path):
    code, out, _ = call("bigons", "find", "--group", "abelian(2)", "--radius", "10", "--x", "a^4",
                        "-L", "2", "-s", "1", "-C", "2")
    assert code == EXIT_OK and json.loads(out)["result"]["found"]
    f = tmp_path / "w.json"
    f.write_text(out)
    code, out, _ = call("bigons", "verify", "--group", "abelian(2)", "--radius", "10", "--witness", str(f))
    assert json.loads(out)["result"]["valid"]
    code, out, _ = call("embed", "rebase", "--group", "abelian(2)", "--radius", "12", "--witness", str(f),
                        "--base", "b")
    assert code == EXIT_OK and json.loads(out)["result"]["witness"]["L"] == "5"


def test_divergence_commands():
    code, out, _ = call("divergence", "function", "--group", "abelian(2)", "--radius", "12", "--n-max", "6",
                        "--csv")
    assert code == EXIT_OK and out.splitlines()[1] == "1,1,exact"
    code, out, _ = call("divergence", "pair", "--group", "free(2)", "--radius", "6", "--a", "1", "--b", "a^2")
    assert json.loads(out)["result"]["length"] == "UNBOUNDED-IN-BALL"


def test_hyperbolicity_commands():
    code, out, _ = call("hyperbolicity", "delta", "--group", "free(2)", "--radius", "3")
    assert json.loads(out)["result"]["delta"] == "0"
    code, out, _ = call("hyperbolicity", "claims", "--group", "free(2)", "--radius", "12", "--implicit",
                        "--samples", "200")
    res = json.loads(out)["result"]
    assert code == EXIT_OK and res["ok"] and res["delta"] == "1" and res["measured_delta"] == "0"


def test_sc_commands(tmp_path):
    code, out, _ = call("sc", "generate", "--length", "2", "--exclude-proper-powers")
    assert code == EXIT_OK and out.count("# skipped") == 4
    f = tmp_path / "rw.grp"
    f.write_text(out)
    code, out, _ = call("sc", "check", "--file", str(f))
    assert json.loads(out)["result"]["holds"]
    code, out, _ = call("sc", "pieces", "--text", "<a, b | a b a^-1 b^-1>", "--csv")
    assert out.splitlines()[1] == "0,4,1,1/4"
    code, _, err = call("sc", "parse", "--text", "<a, b | a b")
    assert code == EXIT_USAGE and "position" in err


def test_embed_verify():
    code, out, _ = call("embed", "verify", "--group", "abelian(2)", "--radius", "8",
                        "--target", "product(abelian(2),free(1))", "--map", "factor-inclusion")
    res = json.loads(out)["result"]
    assert code == EXIT_OK and res["K_measured"] == 1 and res["proper"]


@pytest.mark.parametrize("argv", [["--help"], ["--version"], ["bigons", "count", "--help"]])
def test_help_exits_cleanly(argv, capsys):
    assert run(argv) == EXIT_OK
