from fpcloak.graph import OverlapGraph

TAU = -75.0
SENS = -80.0


def complete_graph(n: int, prefix: str = "v") -> OverlapGraph:
    g = OverlapGraph()
    names = [f"{prefix}{i}" for i in range(n)]
    g.add_vertices(names)
    g.add_edges((a, b) for i, a in enumerate(names) for b in names[i + 1 :])
    return g.recompute_coefficients()


def tiny_config(**extra):
    from fpcloak.harness import load_config

    base = {
        "world": {"ap_count": 90, "width": 200.0, "height": 200.0},
        "walk": {"sessions": 3, "session_steps": 400, "walks": 6, "walk_steps": 10},
        "trials": 40,
        "hs": [1, 3],
        "epsilons": [0.5, 1.0],
        "scale_prefixes": 2,
        "attack": {"population_requests": 300, "protected_requests": 400, "window": 200},
        "cost": {"repeats": 2, "warmups": 0, "prefixes": 3, "hs": [2, 4], "brute_force_timeout": 2.0,
                 "brute_force_repeats": 1},
        "seed": 5,
    }
    from fpcloak.harness.config import _merge

    return load_config(**_merge(base, extra))
