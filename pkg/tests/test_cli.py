import shutil
from pathlib import Path


from clinmask.cli import main
from clinmask.io import write_standoff
from clinmask.synthetic import generate_corpus

FIX = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

CONFIG = """
[pipeline]
seed = {seed}
split = 0.8

[corpus]
format = standoff
text_dir = corpus

[recognizer:crf]
type = crf
model = models/crf.model
use_gazetteers = true
max_epochs = 8

[recognizer:rules]
type = {rules_type}

[assign]
default = crf
CONTACT = rules

[policy]
NAME = mask surrogate_name
DATE = mask shift_date
ID = mask randomize_digits
"""


def make_workspace(root: Path, n_docs=10, seed=5, rules_type="rules"):
    write_standoff(root / "corpus", generate_corpus(n_docs, seed=3, n_sentences=5))
    (root / "run.ini").write_text(CONFIG.format(seed=seed, rules_type=rules_type))
    return root / "run.ini"


def test_train_evaluate_inspect(tmp_path, capsys):
    cfg = make_workspace(tmp_path)
    assert main(["--config", str(cfg), "train"]) == 0
    out, err = capsys.readouterr()
    assert "split: 8 train / 2 test documents" in err
    assert "== crf: token level (2 documents)" in out and "== rules: strict span level" in out
    model = tmp_path / "models" / "crf.model"
    assert model.exists()
    log_lines = (tmp_path / "models" / "crf.model.log").read_text().splitlines()
    assert 1 <= len(log_lines) <= 9
    assert main(["--config", str(cfg), "evaluate", "--machine"]) == 0
    out, _ = capsys.readouterr()
    rows = [line.split("\t") for line in out.splitlines()]
    assert {r[0] for r in rows} == {"crf", "rules", "pipeline"}
    assert all(len(r) == 7 for r in rows)
    assert main(["inspect", str(model), "-k", "0"]) == 0
    out, _ = capsys.readouterr()
    assert out.splitlines()[0].startswith("labels: O B-")
    assert "[O]" not in out
    assert main(["inspect", str(model), "-k", "2"]) == 0
    assert "[B-NAME]" in capsys.readouterr().out


def test_invalid_recognizer_type_exit_2(tmp_path, capsys):
    cfg = make_workspace(tmp_path, rules_type="regexes")
    assert main(["--config", str(cfg), "train"]) == 2
    assert "recognizer:rules.type" in capsys.readouterr().err


def test_unknown_assignment_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[assign]\ndefault = nobody\n")
    assert main(["--config", str(cfg), "deidentify", str(tmp_path), str(tmp_path / "o")]) == 2
    assert "assign.NAME" in capsys.readouterr().err


def test_mask_without_seed_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[policy]\nNAME = mask surrogate_name\n")
    assert main(["--config", str(cfg), "deidentify", str(tmp_path), str(tmp_path / "o")]) == 2
    assert "pipeline.seed" in capsys.readouterr().err
    assert main(["--config", str(cfg), "--seed", "3", "deidentify", str(tmp_path), str(tmp_path / "o")]) == 0


def test_deidentify_defaults_golden(tmp_path):
    inp = tmp_path / "in"
    inp.mkdir()
    shutil.copy(FIX / "standoff" / "a.txt", inp / "a.txt")
    assert main(["deidentify", str(inp), str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "a.txt").read_bytes() == (GOLDEN / "deid_a.txt").read_bytes()
    audit = (tmp_path / "out" / "audit.tsv").read_text().splitlines()
    assert len(audit) == 3 and "03/05/2019" not in "\n".join(audit)


def test_deidentify_empty_input(tmp_path, capsys):
    (tmp_path / "in").mkdir()
    assert main(["deidentify", str(tmp_path / "in"), str(tmp_path / "out")]) == 0
    assert "warning" in capsys.readouterr().err
    assert (tmp_path / "out" / "audit.tsv").read_text().count("\n") == 1


def test_deidentify_missing_input(tmp_path):
    assert main(["deidentify", str(tmp_path / "nope"), str(tmp_path / "out")]) == 1


def test_inspect_missing_file(tmp_path, capsys):
    assert main(["inspect", str(tmp_path / "missing.model")]) == 1
    assert "missing.model" in capsys.readouterr().err


def test_deidentify_workers_match_serial(tmp_path):
    cfg = make_workspace(tmp_path)
    assert main(["--config", str(cfg), "train"]) == 0
    args = ["--config", str(cfg), "deidentify", str(tmp_path / "corpus")]
    assert main(args + [str(tmp_path / "o1")]) == 0
    assert main(["--workers", "2"] + args + [str(tmp_path / "o2")]) == 0
    for f in sorted((tmp_path / "o1").iterdir()):
        assert f.read_bytes() == (tmp_path / "o2" / f.name).read_bytes()


def test_evaluate_missing_model(tmp_path, capsys):
    cfg = make_workspace(tmp_path)
    assert main(["--config", str(cfg), "evaluate"]) == 1
    assert "crf.model" in capsys.readouterr().err


def test_machine_output_parses_back(tmp_path, capsys):
    from clinmask.io import read_standoff
    from clinmask.metrics import parse_report_lines
    from clinmask.ner import RuleRecognizer, evaluate_recognizer
    from clinmask.pipeline import split_documents

    cfg = make_workspace(tmp_path)
    assert main(["--config", str(cfg), "train"]) == 0
    capsys.readouterr()
    assert main(["--config", str(cfg), "evaluate", "--machine", "--all"]) == 0
    lines = [line.split("\t", 1) for line in capsys.readouterr().out.splitlines()]
    rows = parse_report_lines("\n".join(rest for name, rest in lines if name == "rules"))
    train, test = split_documents(read_standoff(tmp_path / "corpus"), 0.8, 5)
    tok, span = evaluate_recognizer(RuleRecognizer(), train + test)
    assert rows[("token", "Overall")] == tok.overall
    assert rows[("span_strict", "Overall")] == span.overall
