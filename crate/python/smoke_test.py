"""Smoke test for the wsd_bench extension module.

Build and install it first:

    pip install --no-build-isolation -e crates/python
"""

import json
import os
import tempfile

import wsd_bench


def main():
    train, test = wsd_bench.Corpus.synthetic(seed=42)
    assert len(train) == 1000 and len(test) == 500, (len(train), len(test))
    assert len(train.task_ids()) == 5

    mfs = wsd_bench.Model.train("mfs", train)
    recall, tasks = mfs.evaluate(test)
    assert abs(recall - 0.6) < 1e-12, recall
    assert sum(n for _, n, _ in tasks) == 500

    nb = wsd_bench.Model.train("nb", train, features="topical")
    recall, _ = nb.evaluate(test)
    assert recall >= 0.95, recall

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "nb.json")
        nb.save(path)
        again = wsd_bench.Model.load(path)
        assert again.predict(test) == nb.predict(test)
        assert again.vocabulary_hash == nb.vocabulary_hash

    small = json.dumps({"dbn": {"hidden_layers": [20], "pretrain_epochs": 2, "finetune_grid": [10]}})
    report = wsd_bench.run_benchmark(
        train, test, algorithms=["mfs", "logreg", "dbn"], feature_sets=["topical"], config=small
    )
    cells = report.cells()
    assert [c[0] for c in cells] == ["mfs", "logreg", "dbn"], cells
    assert cells[2][3] is None and cells[0][3] is not None
    assert report.to_tsv().startswith("algorithm\tfeature_set\tmicro_recall")

    t, df, p = wsd_bench.one_sided_t_test([0.5, 0.6, 0.7], [0.5, 0.6, 0.7])
    assert t == 0.0 and p == 0.5
    assert wsd_bench.porter_stem("relational") == "relat"

    encoded = wsd_bench.featurize(train, features="topical")
    dim, rows, labels = encoded["bank.n"]
    assert len(rows) == len(labels) == 200 and all(max(r) < dim for r in rows if r)

    try:
        wsd_bench.Model.train("forest", train)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown algorithm accepted")

    print(report.to_markdown(), end="")
    print("smoke test passed")


if __name__ == "__main__":
    main()
