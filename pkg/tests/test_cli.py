import json

import pytest

from triplewise.cli import main
from triplewise.data import load_corpus
from triplewise.manifest import file_sha256

DESK_CFG = """
preset = desk
vocab_size = 300
max_len = 12
embed_dim = 8
hidden = 8
latent_dim = 4
batch_size = 8
learning_rate = 1e-3
anneal_steps = 20
max_epochs = 2
patience = 0
seed = 3
"""


@pytest.fixture()
def workspace(tmp_path):
    corpus = tmp_path / "train.jsonl"
    valid = tmp_path / "valid.jsonl"
    assert main(["synth", "--seed", "1", "--n", "24", "--out", str(corpus)]) == 0
    assert main(["synth", "--seed", "2", "--n", "8", "--out", str(valid)]) == 0
    return tmp_path, corpus, valid


class TestSynth:
    def test_idempotent_checksums(self, tmp_path):
        out_a = tmp_path / "a.jsonl"
        out_b = tmp_path / "b.jsonl"
        assert main(["synth", "--seed", "7", "--n", "10", "--out", str(out_a)]) == 0
        assert main(["synth", "--seed", "7", "--n", "10", "--out", str(out_b)]) == 0
        assert file_sha256(out_a) == file_sha256(out_b)

    def test_output_parses_as_corpus(self, tmp_path):
        out = tmp_path / "c.jsonl"
        main(["synth", "--seed", "3", "--n", "12", "--out", str(out)])
        assert len(list(load_corpus(out))) == 12

    def test_n_zero_is_usage_error(self, tmp_path):
        code = main(["synth", "--seed", "1", "--n", "0",
                     "--out", str(tmp_path / "x.jsonl")])
        assert code == 1

    def test_manifest_written_with_checksums(self, tmp_path):
        out = tmp_path / "c.jsonl"
        main(["synth", "--seed", "3", "--n", "4", "--out", str(out)])
        manifest = json.loads((tmp_path / "c.jsonl.manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 3
        assert manifest["outputs"][str(out)] == file_sha256(out)


class TestPrepare:
    def test_vocab_file_format(self, workspace):
        tmp_path, corpus, valid = workspace
        out = tmp_path / "vocab.txt"
        code = main(["prepare", "--train", str(corpus), "--valid", str(valid),
                     "--vocab-size", "100", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[:4] == ["PAD", "UNK", "SOS", "EOS"]

    def test_default_vocab_size_is_40000(self):
        from triplewise.cli import build_parser
        parser = build_parser()
        args = parser.parse_args(["prepare", "--train", "x", "--out", "y"])
        assert args.vocab_size == 40000

    def test_rerun_identical(self, workspace):
        tmp_path, corpus, _ = workspace
        out_a, out_b = tmp_path / "v1.txt", tmp_path / "v2.txt"
        main(["prepare", "--train", str(corpus), "--out", str(out_a)])
        main(["prepare", "--train", str(corpus), "--out", str(out_b)])
        assert file_sha256(out_a) == file_sha256(out_b)

    def test_missing_input_is_data_error(self, tmp_path):
        code = main(["prepare", "--train", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "v.txt")])
        assert code == 2


class TestTrain:
    def _write_cfg(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(DESK_CFG)
        return cfg

    def test_full_train_run_writes_artifacts(self, workspace):
        tmp_path, corpus, valid = workspace
        cfg = self._write_cfg(tmp_path)
        out_dir = tmp_path / "run"
        code = main(["train", "--config", str(cfg), "--train", str(corpus),
                     "--valid", str(valid), "--out-dir", str(out_dir)])
        assert code == 0
        assert (out_dir / "checkpoint_latest.pt").exists()
        assert (out_dir / "training_log.jsonl").exists()
        assert (out_dir / "training_curves.png").exists()
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["command"] == "train"
        records = [json.loads(l) for l in
                   (out_dir / "training_log.jsonl").read_text().splitlines()]
        assert len(records) == 2

    def test_invalid_config_key_is_usage_error(self, workspace, capsys):
        tmp_path, corpus, valid = workspace
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("preset=desk\nnot_a_key=1\n")
        code = main(["train", "--config", str(cfg), "--train", str(corpus),
                     "--valid", str(valid), "--out-dir", str(tmp_path / "r")])
        assert code == 1
        assert "not_a_key" in capsys.readouterr().err

    def test_resume_continues_steps(self, workspace):
        tmp_path, corpus, valid = workspace
        cfg = self._write_cfg(tmp_path)
        out_dir = tmp_path / "run"
        main(["train", "--config", str(cfg), "--train", str(corpus),
              "--valid", str(valid), "--out-dir", str(out_dir)])
        first = [json.loads(l) for l in
                 (out_dir / "training_log.jsonl").read_text().splitlines()]
        cfg4 = tmp_path / "run4.cfg"
        cfg4.write_text(DESK_CFG.replace("max_epochs = 2", "max_epochs = 4"))
        code = main(["train", "--config", str(cfg4), "--train", str(corpus),
                     "--valid", str(valid), "--out-dir", str(out_dir), "--resume"])
        assert code == 0
        records = [json.loads(l) for l in
                   (out_dir / "training_log.jsonl").read_text().splitlines()]
        steps = [r["step"] for r in records]
        assert steps == sorted(steps)
        assert records[-1]["step"] > first[-1]["step"]

    def test_abort_writes_diagnostic_and_exits_3(self, workspace, monkeypatch):
        tmp_path, corpus, valid = workspace
        from triplewise import cli as cli_module
        from triplewise.training import NonFiniteLossError

        def explode(*args, **kwargs):
            raise NonFiniteLossError({"total": float("nan")}, 7)

        monkeypatch.setattr(cli_module, "train", explode)
        out_dir = tmp_path / "boom"
        code = main(["train", "--train", str(corpus), "--valid", str(valid),
                     "--out-dir", str(out_dir)])
        assert code == 3
        diagnostic = json.loads((out_dir / "abort_diagnostic.json").read_text())
        assert diagnostic["step"] == 7


class TestGenerateAndEvaluate:
    @pytest.fixture()
    def trained_dir(self, workspace):
        tmp_path, corpus, valid = workspace
        cfg = tmp_path / "run.cfg"
        cfg.write_text(DESK_CFG)
        out_dir = tmp_path / "run"
        assert main(["train", "--config", str(cfg), "--train", str(corpus),
                     "--valid", str(valid), "--out-dir", str(out_dir)]) == 0
        return tmp_path, corpus, out_dir

    def test_generate_deterministic_and_counted(self, trained_dir):
        tmp_path, corpus, out_dir = trained_dir
        ckpt = out_dir / "checkpoint_latest.pt"
        out_a, out_b = tmp_path / "gen_a.jsonl", tmp_path / "gen_b.jsonl"
        for out in (out_a, out_b):
            code = main(["generate", "--checkpoint", str(ckpt), "--posts",
                         str(corpus), "--strategy", "sample", "--seed", "5",
                         "--out", str(out)])
            assert code == 0
        assert file_sha256(out_a) == file_sha256(out_b)
        n_posts = len(list(load_corpus(corpus)))
        assert len(out_a.read_text().splitlines()) == n_posts

    def test_greedy_ignores_extra_samples_with_warning(self, trained_dir, capsys):
        tmp_path, corpus, out_dir = trained_dir
        ckpt = out_dir / "checkpoint_latest.pt"
        out = tmp_path / "gen.jsonl"
        code = main(["generate", "--checkpoint", str(ckpt), "--posts", str(corpus),
                     "--strategy", "greedy", "--n-samples", "5", "--out", str(out)])
        assert code == 0
        assert "ignores" in capsys.readouterr().err
        assert len(out.read_text().splitlines()) == len(list(load_corpus(corpus)))

    def test_plain_text_posts_accepted(self, trained_dir):
        tmp_path, _, out_dir = trained_dir
        posts = tmp_path / "posts.txt"
        posts.write_text("i ate pizza with my sister this evening .\nhello there .\n")
        out = tmp_path / "gen.jsonl"
        code = main(["generate", "--checkpoint", str(out_dir / "checkpoint_latest.pt"),
                     "--posts", str(posts), "--out", str(out)])
        assert code == 0
        assert len(out.read_text().splitlines()) == 2

    def test_bad_checkpoint_is_data_error(self, trained_dir):
        tmp_path, corpus, _ = trained_dir
        bogus = tmp_path / "bogus.pt"
        bogus.write_bytes(b"not a checkpoint")
        code = main(["generate", "--checkpoint", str(bogus), "--posts",
                     str(corpus), "--out", str(tmp_path / "g.jsonl")])
        assert code == 2

    def test_evaluate_identity_scores_one(self, tmp_path):
        pred = tmp_path / "pred.txt"
        ref = tmp_path / "ref.txt"
        emb = tmp_path / "emb.txt"
        pred.write_text("what did you eat ?\nwhere did you go ?\n")
        ref.write_text("what did you eat ?\nwhere did you go ?\n")
        emb.write_text("what 1 0\ndid 0 1\nyou 1 1\neat 0.5 1\n? 1 0.5\n"
                       "where 0.3 1\ngo 1 0.3\n")
        out = tmp_path / "report.json"
        code = main(["evaluate", "--predictions", str(pred), "--references",
                     str(ref), "--embeddings", str(emb), "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["bleu1"] == 1.0
        assert report["emb_greedy"] == 1.0
        assert (tmp_path / "report.png").exists()
        assert (tmp_path / "report.json.manifest.json").exists()

    def test_evaluate_mismatch_is_data_error(self, tmp_path):
        pred = tmp_path / "pred.txt"
        ref = tmp_path / "ref.txt"
        emb = tmp_path / "emb.txt"
        pred.write_text("a b\n")
        ref.write_text("a b\nc d\n")
        emb.write_text("a 1 0\n")
        code = main(["evaluate", "--predictions", str(pred), "--references",
                     str(ref), "--embeddings", str(emb),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2


class TestUsageErrors:
    def test_unknown_command_exits_one(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 1

    def test_missing_required_flag_exits_one(self):
        with pytest.raises(SystemExit) as err:
            main(["synth", "--seed", "1"])
        assert err.value.code == 1
