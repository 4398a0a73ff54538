"""Pure-Python search kernel; the import-time fallback twin of _kernel_c.

Both kernels implement the identical contract over a SearchPlan:

    evaluate_batch(plan, X, s0, p, adjusted) -> (valid, cost, n_direct)

Per candidate row: label changed features direct/induced against s0,
check causal consistency, decision compliance and direct-change
actionability, and accumulate the weighted Lp cost (induced weights
zeroed when ``adjusted``).  Costs accumulate in feature order with the
same float operations as the compiled kernel and the object-level cost
module, so all three produce bit-identical totals.
"""

from __future__ import annotations

import numpy as np

from causalcf._plan import KIND_CATEGORICAL, OP_EQ, OP_GT, OP_LE, OP_NEQ, SearchPlan

BACKEND_NAME = "python"


def _lit_holds(x: list[float], feat: int, op: int, lo: float, hi: float) -> bool:
    v = x[feat]
    if op == OP_EQ:
        return v == lo
    if op == OP_NEQ:
        return v != lo
    if op == OP_LE:
        return v <= lo
    if op == OP_GT:
        return v > lo
    return lo < v <= hi


def _node_fires(plan_lists, x: list[float], node: int) -> bool:
    dl_feat, dl_op, dl_lo, dl_hi, lit_start, lit_end, child_start, child_end = plan_lists
    for i in range(lit_start[node], lit_end[node]):
        if not _lit_holds(x, dl_feat[i], dl_op[i], dl_lo[i], dl_hi[i]):
            return False
    for child in range(child_start[node], child_end[node]):
        if _node_fires(plan_lists, x, child):
            return False
    return True


def evaluate_batch(
    plan: SearchPlan,
    X: np.ndarray,
    s0: np.ndarray,
    p: int,
    adjusted: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m, n = X.shape
    valid = np.zeros(m, dtype=np.uint8)
    cost = np.zeros(m, dtype=np.float64)
    n_direct = np.zeros(m, dtype=np.int32)

    kinds = plan.kinds.tolist()
    weights = plan.weights.tolist()
    norm = plan.norm_range.tolist()
    actionable = plan.actionable.tolist()
    base = s0.tolist()

    decision_lists = (
        plan.dl_feat.tolist(), plan.dl_op.tolist(), plan.dl_lo.tolist(), plan.dl_hi.tolist(),
        plan.dn_lit_start.tolist(), plan.dn_lit_end.tolist(),
        plan.dn_child_start.tolist(), plan.dn_child_end.tolist(),
    )
    cl_feat = plan.cl_feat.tolist()
    cl_op = plan.cl_op.tolist()
    cl_lo = plan.cl_lo.tolist()
    cl_hi = plan.cl_hi.tolist()
    cr_ant_start = plan.cr_ant_start.tolist()
    cr_ant_end = plan.cr_ant_end.tolist()
    cr_cons = plan.cr_cons.tolist()
    cr_cons_feat = plan.cr_cons_feat.tolist()
    cr_antfeat_start = plan.cr_antfeat_start.tolist()
    cr_antfeat_end = plan.cr_antfeat_end.tolist()
    antfeat = plan.antfeat.tolist()
    n_rules = len(cr_cons)

    def lit(i: int, vec: list[float]) -> bool:
        return _lit_holds(vec, cl_feat[i], cl_op[i], cl_lo[i], cl_hi[i])

    rows = X.tolist()
    for r in range(m):
        x = rows[r]
        changed = [x[j] != base[j] for j in range(n)]
        induced = [False] * n

        # induced labeling, fixpoint over topologically ordered rules
        progressed = True
        while progressed:
            progressed = False
            for ri in range(n_rules):
                f = cr_cons_feat[ri]
                if not changed[f] or induced[f]:
                    continue
                triggered = all(lit(i, x) for i in range(cr_ant_start[ri], cr_ant_end[ri]))
                if not triggered:
                    continue
                if not any(changed[antfeat[a]] for a in range(cr_antfeat_start[ri], cr_antfeat_end[ri])):
                    continue
                if lit(cr_cons[ri], x) and not lit(cr_cons[ri], base):
                    induced[f] = True
                    progressed = True

        consistent = True
        for ri in range(n_rules):
            if all(lit(i, x) for i in range(cr_ant_start[ri], cr_ant_end[ri])) and not lit(cr_cons[ri], x):
                consistent = False
                break

        compliant = any(_node_fires(decision_lists, x, root) for root in range(plan.n_roots))

        ok = consistent and not compliant
        direct_count = 0
        total = 0.0
        for j in range(n):
            if not changed[j]:
                continue
            if not induced[j]:
                direct_count += 1
                if not actionable[j]:
                    ok = False
            w = 0.0 if (adjusted and induced[j]) else weights[j]
            if p == 0:
                total += w
            else:
                if kinds[j] == KIND_CATEGORICAL:
                    d = 1.0
                else:
                    d = (x[j] - base[j]) / norm[j]
                total += w * (abs(d) if p == 1 else d * d)

        valid[r] = 1 if ok else 0
        cost[r] = total
        n_direct[r] = direct_count
    return valid, cost, n_direct
