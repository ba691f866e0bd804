use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "wsd_bench").unwrap();
        wsd_bench::wsd_bench(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("wsd_bench", m).unwrap();
        f(py, &globals);
    });
}

fn run(py: Python<'_>, globals: &Bound<'_, PyDict>, code: &str) {
    let code = CString::new(code).unwrap();
    if let Err(e) = py.run(&code, Some(globals), None) {
        e.print(py);
        panic!("python snippet failed");
    }
}

#[test]
fn train_evaluate_and_round_trip() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
import os, tempfile
train, test = wsd_bench.Corpus.synthetic(seed=3)
m = wsd_bench.Model.train("logreg", train, features="topical")
recall, tasks = m.evaluate(test)
assert recall >= 0.95, recall
assert len(tasks) == 5
with tempfile.TemporaryDirectory() as d:
    p = os.path.join(d, "m.json")
    m.save(p)
    assert wsd_bench.Model.load(p).predict(test) == m.predict(test)
"#,
        );
    });
}

#[test]
fn errors_surface_as_python_exceptions() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
train, _ = wsd_bench.Corpus.synthetic()
for bad in (lambda: wsd_bench.Model.train("forest", train),
            lambda: wsd_bench.Model.train("nb", train, features="syntax"),
            lambda: wsd_bench.one_sided_t_test([1.0], [2.0, 3.0]),
            lambda: wsd_bench.Model.train("nb", train, config='{"dbn": 5}')):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
try:
    wsd_bench.Model.load("/nonexistent/model.json")
except OSError:
    pass
else:
    raise AssertionError("expected OSError")
"#,
        );
    });
}

#[test]
fn statistics_and_config_helpers() {
    with_module(|py, g| {
        run(
            py,
            g,
            r#"
import json
t, df, p = wsd_bench.one_sided_t_test([2.1, 2.5, 2.3], [1.9, 2.0, 2.2])
assert t > 0 and 0.0 < p < 0.5
cfg = json.loads(wsd_bench.default_config())
assert cfg["dbn"]["hidden_layers"] == [100, 100, 100]
assert cfg["reduction_dim"] == 30
assert "dbn" in wsd_bench.algorithms()
"#,
        );
    });
}
