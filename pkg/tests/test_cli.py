import json

import pytest

from lrse import cli, load_index, load_key
from lrse.engine import serialize_index


@pytest.fixture()
def workspace(tmp_path):
    docs = tmp_path / "docs"
    docs.mkdir()
    texts = {
        "01_cloud.txt": "encrypted cloud storage hosts searchable document indexes",
        "02_rank.txt": "ranked retrieval returns the most relevant documents first",
        "03_vec.txt": "word vectors measure semantic similarity between terms",
        "04_misc.txt": "tomatoes ripen faster in warm weather with regular watering",
    }
    for name, text in texts.items():
        (docs / name).write_text(text)
    vocab = sorted({w for t in texts.values() for w in t.split()})
    (tmp_path / "vocab.txt").write_text("\n".join(vocab))
    return tmp_path, docs


def run(args):
    return cli.main([str(a) for a in args])


def setup_artifacts(ws, docs, sigma="0.0", seed="3"):
    emb = ws / "emb.txt"
    key = ws / "k.lrse"
    index = ws / "idx.lrse"
    assert run(["synth-embeddings", "--dim", "24", "--vocab-file", ws / "vocab.txt",
                "--seed", "5", "--out", emb]) == 0
    assert run(["keygen", "--dim", "24", "--seed", "1", "--out", key]) == 0
    assert run(["index", "--key", key, "--embeddings", emb, "--corpus", docs,
                "--out", index, "--sigma", sigma, "--seed", seed]) == 0
    return emb, key, index


class TestEndToEnd:
    def test_search_prints_ranked_results_with_refs(self, workspace, capsys):
        ws, docs = workspace
        emb, key, index = setup_artifacts(ws, docs)
        td = ws / "td.lrse"
        assert run(["trapdoor", "--key", key, "--embeddings", emb, "--out", td,
                    "--seed", "7", "ranked", "documents"]) == 0
        capsys.readouterr()
        assert run(["search", "--index", index, "--trapdoor", td, "--k", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert 1 <= len(lines) <= 3
        scores = []
        for line in lines:
            doc_id, blinded, ref = line.split("\t")
            assert ref.endswith(".txt")
            scores.append(float(blinded))
        assert scores == sorted(scores, reverse=True)

    def test_k_caps_output(self, workspace, capsys):
        ws, docs = workspace
        emb, key, index = setup_artifacts(ws, docs)
        td = ws / "td.lrse"
        run(["trapdoor", "--key", key, "--embeddings", emb, "--out", td, "cloud"])
        capsys.readouterr()
        assert run(["search", "--index", index, "--trapdoor", td, "--k", "50"]) == 0
        assert len(capsys.readouterr().out.strip().splitlines()) == 4

    def test_reindex_new_seed_same_ranking(self, workspace, capsys):
        # fresh split randomness changes the bytes but not the noise-free order
        ws, docs = workspace
        emb, key, index = setup_artifacts(ws, docs, seed="3")
        index2 = ws / "idx2.lrse"
        assert run(["index", "--key", key, "--embeddings", emb, "--corpus", docs,
                    "--out", index2, "--sigma", "0.0", "--seed", "4"]) == 0
        store1, _ = load_index(index)
        store2, _ = load_index(index2)
        assert serialize_index(store1) != serialize_index(store2)
        td = ws / "td.lrse"
        run(["trapdoor", "--key", key, "--embeddings", emb, "--out", td, "semantic", "vectors"])
        capsys.readouterr()
        run(["search", "--index", index, "--trapdoor", td])
        first = [l.split("\t")[0] for l in capsys.readouterr().out.splitlines()]
        run(["search", "--index", index2, "--trapdoor", td])
        second = [l.split("\t")[0] for l in capsys.readouterr().out.splitlines()]
        assert first == second

    def test_keygen_deterministic(self, workspace):
        ws, _ = workspace
        run(["keygen", "--dim", "8", "--seed", "9", "--out", ws / "a.lrse"])
        run(["keygen", "--dim", "8", "--seed", "9", "--out", ws / "b.lrse"])
        assert (ws / "a.lrse").read_bytes() == (ws / "b.lrse").read_bytes()
        key = load_key(ws / "a.lrse")
        assert key.embed_dim == 8

    def test_blinding_out(self, workspace):
        ws, docs = workspace
        emb, key, _ = setup_artifacts(ws, docs)
        td = ws / "td.lrse"
        blinding = ws / "blind.json"
        assert run(["trapdoor", "--key", key, "--embeddings", emb, "--out", td,
                    "--blinding-out", blinding, "cloud"]) == 0
        data = json.loads(blinding.read_text())
        assert data["scale"] > 0

    def test_index_meta_records_run(self, workspace):
        ws, docs = workspace
        emb, key, index = setup_artifacts(ws, docs)
        meta = json.loads((ws / "idx.lrse.meta.json").read_text())
        assert meta["n"] == 24
        assert meta["count"] == 4
        assert meta["run"]["doc_side"] == "in"
        assert meta["payloads"]["0"] == "01_cloud.txt"
        assert "sigma" not in json.dumps(meta).lower()


class TestSimilar:
    def test_lists_nearest_words(self, workspace, capsys):
        ws, docs = workspace
        emb, _, _ = setup_artifacts(ws, docs)
        capsys.readouterr()
        assert run(["similar", "--embeddings", emb, "--k", "4", "cloud"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 4
        sims = [float(l.split("\t")[1]) for l in lines]
        assert sims == sorted(sims, reverse=True)
        assert all(l.split("\t")[0] != "cloud" for l in lines)

    def test_unknown_term_exits_2(self, workspace):
        ws, docs = workspace
        emb, _, _ = setup_artifacts(ws, docs)
        assert run(["similar", "--embeddings", emb, "notaword"]) == cli.EXIT_IO


class TestExitCodes:
    def test_missing_file_is_io_error(self, tmp_path):
        assert run(["search", "--index", tmp_path / "no.lrse",
                    "--trapdoor", tmp_path / "no2.lrse"]) == cli.EXIT_IO

    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["keygen", "--dim", "not-a-number", "--seed", "1", "--out", "x"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_unknown_command_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_corrupt_container_is_io_error(self, workspace):
        ws, docs = workspace
        emb, key, index = setup_artifacts(ws, docs)
        blob = bytearray(index.read_bytes())
        blob[30] ^= 0xFF
        index.write_bytes(bytes(blob))
        td = ws / "td.lrse"
        run(["trapdoor", "--key", key, "--embeddings", emb, "--out", td, "cloud"])
        assert run(["search", "--index", index, "--trapdoor", td]) == cli.EXIT_IO

    def test_verify_failure_exits_3(self, monkeypatch):
        from lrse import verify

        fake = [verify.CheckResult("stub", False, "forced failure", 0.0)]
        monkeypatch.setattr(verify, "run_all", lambda seed=0, quick=False: fake)
        assert cli.main(["verify", "--quick"]) == cli.EXIT_VERIFY

    def test_verify_success_exits_0(self, monkeypatch, capsys):
        from lrse import verify

        fake = [verify.CheckResult("stub", True, "ok", 0.01)]
        monkeypatch.setattr(verify, "run_all", lambda seed=0, quick=False: fake)
        assert cli.main(["verify"]) == 0
        assert "PASS  stub" in capsys.readouterr().out


class TestBench:
    def test_small_run_writes_csv_and_figures(self, tmp_path, capsys):
        out = tmp_path / "bench"
        code = cli.main([
            "bench", "--lrse-dims", "8,12", "--mrse-dims", "20",
            "--doc-counts", "10,20", "--docs", "20",
            "--trapdoor-reps", "3", "--query-reps", "2",
            "--out-dir", str(out),
        ])
        assert code == 0
        csv_lines = (out / "bench.csv").read_text().strip().splitlines()
        assert csv_lines[0] == "scheme,phase,dimension,doc_count,seconds"
        assert len(csv_lines) > 6
        for name in (
            "index_time_vs_dimension.png",
            "trapdoor_time_vs_dimension.png",
            "query_time_vs_dimension.png",
            "index_time_vs_documents.png",
        ):
            assert (out / name).exists(), name

    def test_unknown_scheme_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli.main(["bench", "--scheme", "bogus", "--out-dir", str(tmp_path)])
        assert exc.value.code == cli.EXIT_USAGE

    def test_dims_requires_single_scheme(self, tmp_path):
        assert cli.main(["bench", "--dims", "8,12", "--out-dir", str(tmp_path)]) == cli.EXIT_USAGE

    def test_per_scheme_invocations_show_index_gap(self, tmp_path):
        # at every listed dimension pair the embedding scheme builds faster
        import csv

        def index_times(scheme, dims, out):
            assert cli.main([
                "bench", "--scheme", scheme, "--dims", dims,
                "--doc-counts", "40", "--docs", "40",
                "--trapdoor-reps", "2", "--query-reps", "2",
                "--out-dir", str(tmp_path / out),
            ]) == 0
            with open(tmp_path / out / "bench.csv") as fh:
                return {
                    int(r["dimension"]): float(r["seconds"])
                    for r in csv.DictReader(fh)
                    if r["phase"] == "index"
                }

        lrse = index_times("lrse", "8,16", "l")
        mrse = index_times("mrse", "256,512", "m")
        for lt in lrse.values():
            for mt in mrse.values():
                assert lt < mt


class TestDualEmbeddings:
    def test_index_uses_out_side_when_available(self, workspace, capsys):
        ws, docs = workspace
        emb = ws / "emb.txt"
        emb_out = ws / "emb_out.txt"
        run(["synth-embeddings", "--dim", "16", "--vocab-file", ws / "vocab.txt",
             "--seed", "5", "--out", emb, "--dual-out", emb_out])
        key = ws / "k.lrse"
        run(["keygen", "--dim", "16", "--seed", "1", "--out", key])
        index = ws / "idx.lrse"
        assert run(["index", "--key", key, "--embeddings", emb, "--embeddings-out", emb_out,
                    "--corpus", docs, "--out", index]) == 0
        meta = json.loads((ws / "idx.lrse.meta.json").read_text())
        assert meta["run"]["doc_side"] == "out"
        assert meta["run"]["side_fallback"] is False

    def test_out_request_falls_back_without_dual(self, workspace, capsys):
        ws, docs = workspace
        emb, key, _ = setup_artifacts(ws, docs)
        index = ws / "idx_fb.lrse"
        assert run(["index", "--key", key, "--embeddings", emb, "--corpus", docs,
                    "--out", index, "--doc-side", "out"]) == 0
        meta = json.loads((ws / "idx_fb.lrse.meta.json").read_text())
        assert meta["run"]["doc_side"] == "in"
        assert meta["run"]["side_fallback"] is True
        assert "fell back" in capsys.readouterr().out
