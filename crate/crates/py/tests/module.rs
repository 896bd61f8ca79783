use std::ffi::CString;

use pyo3::prelude::*;
use razak::razak as razak_module;

fn run(code: &str) -> PyResult<()> {
    pyo3::append_to_inittab!(razak_module);
    Python::initialize();
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        py.run(&code, None, None)
    })
}

// Embedding can only be initialized once per process, so everything runs in
// one interpreter session.
#[test]
fn module_round_trip() {
    run(r#"
import razak
seed = razak.BuildingBlock(1, 1)
tower = razak.Tower(seed, 3, 8)
assert [(b.n, b.a) for b in tower.stages()] == [(1, 1), (3, 3), (21, 7)]
phi = tower.stage_map(1, 2)
assert phi.oscillation() == "1/2" and phi.covers()
grid = tower.element_grid(1, 2)
e = razak.BlockElement.random(seed, grid, seed=3)
g = razak.BlockElement.random(seed, grid, seed=4)
assert phi.hom_defect([e, g]) < 1e-8
assert phi.adjoint_defect([e]) < 1e-10
tau = razak.Trace.point(phi.target, 0.25)
assert abs(tau(phi.apply(e)) - tau.pushforward(phi)(e)) < 1e-12
h = razak.BlockElement.canonical_h(seed, grid)
assert abs(tower.trace_rate(1, h, 2)["gap"] - 5 / 24) < 1e-12
assert razak.Tower.from_json(tower.to_json()).stages() == tower.stages()
try:
    razak.Tower(seed, 5, 8)
    raise AssertionError("depth 5 should exceed the cap")
except razak.ResourceLimitError:
    pass
try:
    e.product(razak.BlockElement.random(razak.BuildingBlock(2, 1), grid))
    raise AssertionError("mismatched blocks should be rejected")
except ValueError:
    pass
"#)
    .unwrap();
}
