"""Rendering of synthesis reports and budgets as documents or text tables."""

import json
from decimal import Decimal
from fractions import Fraction

from .budget import round_half_up


def fixed(x, places=6):
    return str(round_half_up(x, places))


def exact(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def sci(n):
    return f"{Decimal(n):.3e}"


def millions(n):
    return str(round_half_up(Fraction(n, 10**6), 2))


def budget_document(result, scope=None, scope_aware=None):
    doc = {}
    if scope is not None:
        doc["scope"] = {
            "alpha": scope.alpha,
            "beta": scope.beta,
            "lambda": exact(scope.lam),
            "scope_aware": bool(scope_aware),
        }
    doc.update(
        phi=result.phi,
        phi_prime_floor=result.phi_prime_floor,
        fraction=fixed(result.fraction),
        fraction_exact=exact(result.fraction),
        gamma_ideal=fixed(result.gamma_ideal, 3),
        gamma_ideal_exact=exact(result.gamma_ideal),
    )
    return doc


def budget_table(result, scope=None, scope_aware=None):
    rows = []
    if scope is not None:
        rows += [
            ("alpha", scope.alpha),
            ("beta", scope.beta),
            ("lambda", exact(scope.lam)),
            ("scope aware", "yes" if scope_aware else "no"),
        ]
    rows += [
        ("phi", f"{result.phi} ({millions(result.phi)} M)"),
        ("fraction", f"{fixed(result.fraction)} (~{round_half_up(result.fraction, 2)})"),
        ("phi' floor", f"{result.phi_prime_floor} ({millions(result.phi_prime_floor)} M)"),
        ("gamma", fixed(result.gamma_ideal, 3)),
    ]
    w = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{w}}  {v}" for k, v in rows) + "\n"


def report_document(rep):
    doc = {
        "network": rep.network,
        "phi": rep.phi,
        "phi_prime_floor": rep.phi_prime_floor,
        "phi_prime": rep.phi_prime,
        "budget_fraction": fixed(rep.fraction),
        "budget_fraction_exact": exact(rep.fraction),
        "achieved_fraction": fixed(rep.achieved_fraction),
        "achieved_fraction_exact": exact(rep.achieved_fraction),
        "gamma_ideal": fixed(rep.gamma_ideal, 3),
        "objective_mode": rep.objective_mode,
        "window_tolerance": exact(rep.window_tolerance),
        "target_range": list(rep.target_range),
        "policy": {"mode": rep.policy.mode, "theta": None if rep.policy.theta is None else exact(rep.policy.theta)},
        "approximate": rep.approximate,
    }
    if rep.scope is not None:
        doc["scope"] = {
            "alpha": rep.scope.alpha,
            "beta": rep.scope.beta,
            "lambda": exact(rep.scope.lam),
            "scope_aware": rep.scope_aware,
        }
    doc["classifier_classes"] = {"before": rep.classifier_before, "after": rep.classifier_after}
    doc["layers"] = [
        {
            "name": name,
            "factor": f,
            "depths_before": list(db),
            "depths_after": list(da),
            "params_before": pb,
            "params_after": pa,
        }
        for name, f, db, da, pb, pa in zip(
            rep.layer_names, rep.factors, rep.depths_before, rep.depths_after, rep.params_before, rep.params_after
        )
    ]
    doc["bottleneck_flags"] = list(rep.bottleneck_flags)
    doc["flops"] = {"before": rep.flops_before, "after": rep.flops_after}
    doc["solution_space"] = {"affine": rep.space_affine, "non_affine": rep.space_non_affine}
    if rep.notes:
        doc["notes"] = list(rep.notes)
    return doc


def report_json(rep):
    return json.dumps(report_document(rep), indent=2) + "\n"


def report_table(rep):
    lines = [
        f"network            {rep.network}",
        f"phi                {rep.phi} ({millions(rep.phi)} M)",
        f"budget fraction    {fixed(rep.fraction)} (~{round_half_up(rep.fraction, 2)})",
        f"phi' floor         {rep.phi_prime_floor} ({millions(rep.phi_prime_floor)} M)",
        f"phi' achieved      {rep.phi_prime} ({millions(rep.phi_prime)} M), ratio {fixed(rep.achieved_fraction)} (~{round_half_up(rep.achieved_fraction, 2)})",
        f"objective          {rep.objective_mode}" + (f" tol {exact(rep.window_tolerance)}" if rep.objective_mode == "window" else ""),
        f"accepted range     [{rep.target_range[0]}, {rep.target_range[1]}]",
        f"policy             {rep.policy}",
        f"classifier         {rep.classifier_before} -> {rep.classifier_after}",
        f"flops              {rep.flops_before} -> {rep.flops_after}",
        f"solution space     {rep.space_affine} affine, {sci(rep.space_non_affine)} non-affine",
        f"bottleneck flags   {', '.join(map(str, rep.bottleneck_flags)) or 'none'}",
    ]
    if rep.approximate:
        lines.append("NOTE               quantized search, result approximate")
    lines.append("")
    header = ("layer", "factor", "depths", "params (M)")
    rows = [
        (
            name,
            str(f),
            "/".join(map(str, da)),
            f"{millions(pb)} -> {millions(pa)}",
        )
        for name, f, da, pb, pa in zip(rep.layer_names, rep.factors, rep.depths_after, rep.params_before, rep.params_after)
    ]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(4)]
    for r in [header] + rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    for note in rep.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"
