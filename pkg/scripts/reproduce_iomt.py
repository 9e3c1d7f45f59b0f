"""Recompute the IoMT attack distribution and compare it with the published table.

    python3 scripts/reproduce_iomt.py [--no-override]
"""
import argparse

from threatchain import catalog, reference
from threatchain.markov import attack_distribution, build_transition_matrix, absorption_metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--no-override", action="store_true", help="normalise by sum W_i instead of 390")
    args = ap.parse_args()

    model = catalog.builtin_iomt_model()
    if args.no_override:
        model = model.without_override()
    dist = attack_distribution(model)
    excluded, flagged = reference.excluded_threats(), reference.flagged_threats()

    print(f"denominator {dist.denominator:g}  alpha {dist.alpha:g}  gap {dist.alpha_gap:.3e}")
    print(f"{'threat':<7}{'W':>7}{'p_attack':>13}{'published':>13}{'rel err':>10}  status")
    for row in dist.rows:
        pub = reference.PUBLISHED_P_ATTACK[row.threat_id]
        err = (row.p_attack - pub) / pub
        status = "excluded" if row.threat_id in excluded else "flagged" if row.threat_id in flagged else ""
        if not status:
            status = "ok" if abs(err) <= reference.GOLDEN_REL_TOL else "MISMATCH"
        print(f"{row.threat_id:<7}{row.weight:>7.1f}{row.p_attack:>13.4e}{pub:>13.4e}{err:>+10.2%}  {status}")
    print(f"total p_attack {dist.total_p_attack:.5e}")

    metrics = absorption_metrics(build_transition_matrix(model), [2, 8, 64, 1024])
    for n, prob in metrics.absorption_probability.items():
        print(f"P^{n}[S,A] = {prob:.6f}")
    print(f"expected steps to absorption from S: {metrics.expected_steps_from_S:.2f}")


if __name__ == "__main__":
    main()
