import pytest

from configuration import WindowConfiguration
from file_formats import decode_configuration, decode_packing, decode_report, encode_configuration
from groups import ball, parse_group
from main import EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE, main
from run_store import get_run_by_digest

F2 = parse_group("F2")


@pytest.fixture(autouse=True)
def clean_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("PROXLAB_WORKERS", raising=False)
    monkeypatch.delenv("PROXLAB_DB", raising=False)


def _report(path):
    return decode_report((path.parent / (path.name + ".report")).read_text())


def test_sample_field(tmp_path):
    out = tmp_path / "field.txt"
    assert main(["sample-field", "--group", "F2", "--window-radius", "2", "--seed", "5", "--out", str(out)]) == EXIT_OK
    c = decode_configuration(out.read_text())
    assert c.window == ball(F2, 2).elements and c.seed == 5
    report = _report(out)
    assert report.status == "pass" and report.fields["sites"] == "17"


def test_event_estimate_ignores_workers(tmp_path):
    outs = []
    for workers in ("1", "2"):
        out = tmp_path / f"event{workers}.txt"
        argv = ["sample-field", "--group", "Z", "--sites", "0", "--trials", "300", "--workers", workers, "--out", str(out)]
        assert main(argv) == EXIT_OK
        outs.append(out)
    assert outs[0].read_text() == outs[1].read_text()
    assert _report(outs[0]) == _report(outs[1])


def test_bad_arguments_exit_with_usage(tmp_path, capsys):
    assert main(["sample-field", "--group", "Q"]) == EXIT_USAGE
    assert "ERROR" in capsys.readouterr().err
    assert main(["witness", "verify", "--group", "F2"]) == EXIT_USAGE
    assert main(["sample-field", "--config", str(tmp_path / "nope.txt")]) == EXIT_USAGE


def test_config_file_and_flags(tmp_path):
    (tmp_path / "run.txt").write_text("group=Z\nwindow_radius=2\nseed=1\n")
    out = tmp_path / "c.txt"
    assert main(["sample-field", "--config", "run.txt", "--seed", "3", "--out", str(out)]) == EXIT_OK
    c = decode_configuration(out.read_text())
    assert len(c) == 5 and c.seed == 3


def test_witness_sample_then_verify(tmp_path):
    out = tmp_path / "s.txt"
    assert main(["witness", "sample", "--group", "F2", "--x", "1", "--out", str(out)]) == EXIT_OK
    assert (tmp_path / "s.txt.plan").exists()
    argv = ["witness", "verify", "--group", "F2", "--x", "1", "--input", str(out),
            "--plan", str(tmp_path / "s.txt.plan"), "--out", str(tmp_path / "v.txt")]
    assert main(argv) == EXIT_OK
    assert decode_report((tmp_path / "v.txt").read_text()).fields["uncovered"] == "0"


def test_witness_sample_sizes_y1(tmp_path):
    out = tmp_path / "s.txt"
    argv = ["witness", "sample", "--group", "F2", "--x", "1", "--y1-size", "6", "--seed", "3", "--out", str(out)]
    assert main(argv) == EXIT_OK
    fields = _report(out).fields
    assert fields["y1_size"] == "6" and fields["seed_found"] == "3"


def test_glue_sample_reads_plan_and_s_config(tmp_path):
    assert main(["witness", "sample", "--group", "F2", "--x", "1", "--out", "s.txt"]) == EXIT_OK
    argv = ["glue", "sample", "--group", "F2", "--plan", "s.txt.plan", "--s-config", "s.txt",
            "--seeds", "4,5", "--window-radius", "3", "--out", "t.txt"]
    assert main(argv) == EXIT_OK
    assert _report(tmp_path / "t.txt").fields["seeds"] == "4,5"


@pytest.mark.parametrize("seeds", ["4", "1,2,3", "a,b"])
def test_glue_sample_rejects_malformed_seeds(seeds, capsys):
    argv = ["glue", "sample", "--group", "F2", "--x", "1", "--seeds", seeds, "--out", "t.txt"]
    assert main(argv) == EXIT_USAGE
    assert "seeds" in capsys.readouterr().err


def test_witness_sample_without_switching_element(tmp_path):
    out = tmp_path / "r.txt"
    assert main(["witness", "sample", "--group", "Z", "--switch-radius", "2", "--out", str(out)]) == EXIT_INCONCLUSIVE
    assert decode_report(out.read_text()).status == "inconclusive"


def test_pack_saturate_and_glue(tmp_path):
    paths = []
    for seed in ("1", "2"):
        out = tmp_path / f"p{seed}.txt"
        argv = ["pack", "saturate", "--group", "Z", "--window-radius", "12", "--seed", seed, "--out", str(out)]
        assert main(argv) == EXIT_OK
        paths.append(str(out))
    glued = tmp_path / "q.txt"
    argv = ["pack", "glue", "--group", "Z", "-i", paths[0], "-i", paths[1],
            "--e1=-8 -7", "--e2=7 8", "--out", str(glued)]
    assert main(argv) == EXIT_OK
    assert decode_packing(glued.read_text()).assignment
    assert _report(glued).fields["restriction_mismatches"] == "0"


def test_glue_sample_and_verify(tmp_path):
    witness = WindowConfiguration(
        F2, {g: int(g.is_identity() or g.encode()[-1] in "bB") for g in ball(F2, 2)}
    )
    (tmp_path / "s.txt").write_text(encode_configuration(witness))
    common = ["--group", "F2", "--x", "1 a A", "--window-radius", "5"]
    for name, seeds in (("t0", "0,1"), ("t2", "2,3")):
        argv = ["glue", "sample", *common, "--seeds", seeds, "--s-config", "s.txt", "--out", f"{name}.txt"]
        assert main(argv) == EXIT_OK
        assert _report(tmp_path / f"{name}.txt").fields["seeds"] == seeds
    argv = ["glue", "verify", *common, "-i", "t0.txt", "-i", "t2.txt", "-i", "t0.txt.packing",
            "--plan", "t0.txt.plan", "--out", "v.txt"]
    assert main(argv) == EXIT_OK
    assert "common_one" in decode_report((tmp_path / "v.txt").read_text()).fields


def test_prox_tprime_covers_every_pattern(tmp_path):
    out = tmp_path / "tp.txt"
    argv = ["prox", "tprime", "--group", "Z", "--epsilon-inv", "2", "--window-radius", "20", "--out", str(out)]
    assert main(argv) == EXIT_OK
    fields = _report(out).fields
    assert fields["x_patterns_found"] == fields["x_patterns_total"] == "8"
    assert fields["v_radius"] == "13"


def test_prox_obstruct_and_faithful(tmp_path):
    z = ["--group", "Z", "--element", "1", "--trials", "10"]
    assert main(["prox", "obstruct", *z, "--out", "o.txt"]) == EXIT_OK
    assert decode_report((tmp_path / "o.txt").read_text()).fields["certified"] == "10"
    assert main(["prox", "faithful", *z, "--out", "f.txt"]) == EXIT_OK
    f2 = ["--group", "F2", "--element", "a", "--trials", "3"]
    assert main(["prox", "obstruct", *f2, "--out", "o2.txt"]) == EXIT_INCONCLUSIVE
    assert main(["prox", "obstruct", "--group", "Z", "--out", "o3.txt"]) == EXIT_USAGE


def test_bound_eval_and_record(tmp_path):
    db = str(tmp_path / "runs.db")
    out = tmp_path / "b.txt"
    argv = ["bound", "eval", "--group", "Z", "--size-floor", "55", "--out", str(out), "--record", "--db", db]
    assert main(argv) == EXIT_OK
    report = decode_report(out.read_text())
    assert report.fields["c_den"] == "55" and report.fields["admissible"] == "false"
    record = get_run_by_digest(report.fields["digest"], db)
    assert record is not None and record.op == "bound-eval" and record.status == "pass"
