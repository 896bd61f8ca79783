pub const SCHEMA: &str = "\
config.json (every field optional)
  block        {\"n\": int, \"a\": int}   seed block A(n, (a+1)n), default {1, 1}
  depth        int     number of stages, default 3
  grid         int     tower grid, a power of two, default 16
  seed         int     seed of every random sample, default 1
  samples      int     random elements per map, default 4
  points       int     equispaced x values for eig-density, default 16
  dense_cap    int     largest target dimension for dense checks in verify, default 200
  out          path    output directory, default \"out\"
  tolerances   {hom_defect, adjoint_defect, boundary, unitary, rate_slack,
                approx_unit, norm_defect}

report.json
  command, config, invariants[{name, value, bound, relation (le|eq), pass}],
  notes[], data, pass. Floats carry 17 significant digits.

tower build
  tower.json        seed, depth, grid_size, stages, steps[{branches, unitary_path}]

tower verify
  verify.csv        i, j, oscillation, covers, hom_defect, adjoint_defect, boundary_defect
                    (defect cells empty when the target exceeds dense_cap)

experiment eig-density
  eig_density.csv   j, x, delta, distinct
  eig_density.dat   j x delta

experiment trace-gap
  trace_gap.csv     element, j, gap, modulus
  trace_gap.dat     j gap            (element h only)

experiment approx-unit
  approx_unit.csv   j, element, n, defect

experiment central
  central.csv       j, trace_match, norm_recovery
  central.dat       j trace_match norm_recovery

exit status: 0 all invariants pass, 1 invariant failure, 2 configuration error,
3 resource limit. RAZAK_WORKERS sets the worker count.
";
