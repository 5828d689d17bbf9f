"""Self-similar Markov processes in the orthant: simulation, Lamperti transforms, closed forms and checks."""

from ._lamperti import (
    MapPath,
    SkeletonPath,
    StableParams,
    bm_map_coefficients,
    cf_test,
    corrective_jump_cdf,
    corrective_jump_density,
    corrective_jump_from_uniforms,
    generator,
    jump_kernel_density,
    jump_vector_v,
    killing_rate,
    known_tests,
    map_to_ssmp,
    polar_compose,
    polar_decompose,
    read_map_csv,
    read_skeleton_csv,
    run_experiment,
    run_test,
    sde_coefficients,
    simulate,
    skeleton_distance,
    ssmp_to_map,
)

__all__ = [name for name in dir() if not name.startswith("_")]
