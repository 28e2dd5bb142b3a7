"""Bundled seed heuristics that start every run."""

from __future__ import annotations

TSP_PARAMS = "d_cur, d_start, d_mean_unvis, d_min_unvis, d_max_unvis, frac_remaining"
OBP_PARAMS = "item_size, remaining_cap, residual_after, bin_utilization"

TSP_SEEDS: dict[str, str] = {
    "nearest_neighbor": f"""
fn score({TSP_PARAMS}) {{
    return d_cur;
}}
""",
    "weighted_lookahead": f"""
fn score({TSP_PARAMS}) {{
    # prefer cities whose own nearest neighbour is close as well
    let look = d_min_unvis;
    return d_cur + 0.3 * look;
}}
""",
    "homeward_bias": f"""
fn score({TSP_PARAMS}) {{
    let late = 1.0 - frac_remaining;
    return d_cur - 0.3 * late * d_start;
}}
""",
    "outlier_first": f"""
fn score({TSP_PARAMS}) {{
    let spread = d_mean_unvis - d_min_unvis;
    if d_min_unvis > 2.0 * d_cur {{
        return 0.8 * d_cur;
    }}
    return d_cur + 0.1 * spread;
}}
""",
    "centrality": f"""
fn score({TSP_PARAMS}) {{
    return d_cur - 0.2 * (d_max_unvis - d_mean_unvis);
}}
""",
}

OBP_SEEDS: dict[str, str] = {
    "best_fit": f"""
fn score({OBP_PARAMS}) {{
    return -residual_after;
}}
""",
    "first_fit": f"""
fn score({OBP_PARAMS}) {{
    # every feasible bin ties, so the lowest index wins
    return 0.0;
}}
""",
    "worst_fit": f"""
fn score({OBP_PARAMS}) {{
    return residual_after;
}}
""",
    "near_full": f"""
fn score({OBP_PARAMS}) {{
    if residual_after < 0.1 * item_size {{
        return 1000.0 - residual_after;
    }}
    return bin_utilization;
}}
""",
    "relative_fit": f"""
fn score({OBP_PARAMS}) {{
    let slack = residual_after / (remaining_cap + 1.0);
    return -slack - 0.01 * residual_after;
}}
""",
}

SEEDS = {"tsp": TSP_SEEDS, "obp": OBP_SEEDS}


def seed_sources(problem: str) -> list[str]:
    return [text.lstrip("\n") for text in SEEDS[problem].values()]
