import logging

import numpy as np
import pytest

from pairembed import encode, formats
from pairembed.cli import main_pairs, main_tokens

from conftest import HIDDEN_SIZE


class TestPairCorpus:
    def test_read_valid(self, pair_tsv):
        records = encode.read_pair_corpus(pair_tsv)
        assert len(records) == 10
        assert records[0].query == "hello world"
        assert records[0].response == "how are you"

    def test_missing_tab(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("no tab here\n", encoding="utf-8")
        with pytest.raises(ValueError, match="TAB"):
            encode.read_pair_corpus(path)

    def test_empty_side(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("query\t\n", encoding="utf-8")
        with pytest.raises(ValueError, match="empty"):
            encode.read_pair_corpus(path)


class TestEncodePairs:
    def test_shape_and_order(self, tiny_model_dir, pair_tsv):
        tokenizer, model = encode.load_encoder(tiny_model_dir)
        records = encode.read_pair_corpus(pair_tsv)
        matrix = encode.encode_pairs(records, tokenizer, model, batch_size=4)
        assert matrix.shape == (10, HIDDEN_SIZE)
        assert matrix.dtype == np.float32
        # row order is corpus order: re-encoding a single pair reproduces its row
        single = encode.encode_pairs(records[3:4], tokenizer, model)
        assert np.array_equal(single[0], matrix[3])

    def test_deterministic(self, tiny_model_dir, pair_tsv):
        tokenizer, model = encode.load_encoder(tiny_model_dir)
        records = encode.read_pair_corpus(pair_tsv)
        a = encode.encode_pairs(records, tokenizer, model, batch_size=4)
        b = encode.encode_pairs(records, tokenizer, model, batch_size=4)
        assert np.array_equal(a, b)

    def test_truncation_warns_but_produces_row(self, tiny_model_dir, caplog):
        tokenizer, model = encode.load_encoder(tiny_model_dir)
        long_pair = encode.PairRecord(query="hello " * 30, response="world " * 30)
        with caplog.at_level(logging.WARNING):
            matrix = encode.encode_pairs([long_pair], tokenizer, model)
        assert matrix.shape == (1, HIDDEN_SIZE)
        assert any("truncat" in r.message for r in caplog.records)


class TestEncodeTokens:
    def test_specials_dropped(self, tiny_model_dir):
        tokenizer, model = encode.load_encoder(tiny_model_dir)
        matrices = encode.encode_tokens(["hello world how are you"], tokenizer, model)
        # 5 word pieces, [CLS]/[SEP] removed
        assert matrices[0].shape == (5, HIDDEN_SIZE)

    def test_empty_line_gap(self, tiny_model_dir, caplog):
        tokenizer, model = encode.load_encoder(tiny_model_dir)
        with caplog.at_level(logging.WARNING):
            matrices = encode.encode_tokens(["hello", "", "world"], tokenizer, model)
        assert matrices[1] is None
        assert matrices[0] is not None and matrices[2] is not None
        assert any("empty" in r.message for r in caplog.records)


class TestCliRoundTrip:
    def test_pairs_cli_passes_primary_validation(self, tiny_model_dir, pair_tsv, tmp_path, capsys):
        out = tmp_path / "emb.npy"
        args = ["--input", str(pair_tsv), "--model", tiny_model_dir, "--out", str(out), "--quiet"]
        assert main_pairs(args) == 0

        from distmetric import read_embedding_set

        emb = read_embedding_set(out)
        assert emb.count == 10
        assert emb.dim == HIDDEN_SIZE
        assert emb.data.dtype == np.float32

    def test_pairs_cli_bitwise_identical_runs(self, tiny_model_dir, pair_tsv, tmp_path):
        out1, out2 = tmp_path / "a.npy", tmp_path / "b.npy"
        base = ["--input", str(pair_tsv), "--model", tiny_model_dir, "--quiet"]
        assert main_pairs(base + ["--out", str(out1)]) == 0
        assert main_pairs(base + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_tokens_cli_archive_validates(self, tiny_model_dir, tmp_path):
        sents = tmp_path / "sents.txt"
        sents.write_text("hello world\n\nhow are you today\n", encoding="utf-8")
        out_dir = tmp_path / "arch"
        args = ["--input", str(sents), "--model", tiny_model_dir, "--out", str(out_dir), "--quiet"]
        assert main_tokens(args) == 0

        from distmetric import read_token_archive

        archive = read_token_archive(out_dir)
        assert len(archive) == 3
        assert archive.sentences[1] is None
        assert archive.dim == HIDDEN_SIZE

    def test_tokens_cli_deterministic(self, tiny_model_dir, tmp_path):
        sents = tmp_path / "sents.txt"
        sents.write_text("hello world\ngood morning\n", encoding="utf-8")
        d1, d2 = tmp_path / "a", tmp_path / "b"
        base = ["--input", str(sents), "--model", tiny_model_dir, "--quiet"]
        assert main_tokens(base + ["--out", str(d1)]) == 0
        assert main_tokens(base + ["--out", str(d2)]) == 0
        assert (d1 / "embeddings.bin").read_bytes() == (d2 / "embeddings.bin").read_bytes()
        assert (d1 / "index.json").read_bytes() == (d2 / "index.json").read_bytes()

    def test_model_load_failure_nonzero(self, pair_tsv, tmp_path, capsys):
        args = [
            "--input", str(pair_tsv),
            "--model", str(tmp_path / "no_such_model"),
            "--out", str(tmp_path / "x.npy"),
            "--quiet",
        ]
        assert main_pairs(args) != 0
        assert "cannot load model" in capsys.readouterr().err

    def test_bad_input_exit_2(self, tiny_model_dir, tmp_path):
        args = [
            "--input", str(tmp_path / "missing.tsv"),
            "--model", tiny_model_dir,
            "--out", str(tmp_path / "x.npy"),
            "--quiet",
        ]
        assert main_pairs(args) == 2


class TestFormats:
    def test_write_matrix_atomic_and_valid(self, tmp_path, capsys):
        from distmetric import read_embedding_set

        matrix = np.arange(12, dtype=np.float32).reshape(3, 4) / 7.0
        formats.write_matrix(matrix, tmp_path / "m.npy")
        back = read_embedding_set(tmp_path / "m.npy")
        assert np.array_equal(back.data, matrix)

    def test_write_matrix_rejects_1d(self, tmp_path):
        with pytest.raises(ValueError):
            formats.write_matrix(np.zeros(4, dtype=np.float32), tmp_path / "m.npy")
