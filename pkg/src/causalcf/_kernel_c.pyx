# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernel; the fast twin of _kernel_py.

Same contract, same arithmetic, same accumulation order — the two must
produce bit-identical outputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

BACKEND_NAME = "compiled"

cdef int OP_EQ = 0, OP_NEQ = 1, OP_LE = 2, OP_GT = 3, OP_IN = 4
cdef int KIND_CATEGORICAL = 2


cdef inline bint _lit_holds(double v, unsigned char op, double lo, double hi) nogil:
    if op == OP_EQ:
        return v == lo
    if op == OP_NEQ:
        return v != lo
    if op == OP_LE:
        return v <= lo
    if op == OP_GT:
        return v > lo
    return lo < v <= hi


cdef bint _node_fires(
    double[:, :] X,
    int r,
    int node,
    int[:] dl_feat, unsigned char[:] dl_op, double[:] dl_lo, double[:] dl_hi,
    int[:] lit_start, int[:] lit_end, int[:] child_start, int[:] child_end,
) nogil:
    cdef int i, child
    for i in range(lit_start[node], lit_end[node]):
        if not _lit_holds(X[r, dl_feat[i]], dl_op[i], dl_lo[i], dl_hi[i]):
            return False
    for child in range(child_start[node], child_end[node]):
        if _node_fires(X, r, child, dl_feat, dl_op, dl_lo, dl_hi,
                       lit_start, lit_end, child_start, child_end):
            return False
    return True


def evaluate_batch(plan, cnp.ndarray X_in, cnp.ndarray s0_in, int p, bint adjusted):
    cdef double[:, :] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef double[:] base = np.ascontiguousarray(s0_in, dtype=np.float64)
    cdef int m = X.shape[0]
    cdef int n = X.shape[1]

    cdef cnp.int8_t[:] kinds = plan.kinds
    cdef double[:] weights = plan.weights
    cdef double[:] norm = plan.norm_range
    cdef unsigned char[:] actionable = plan.actionable

    cdef int[:] dl_feat = plan.dl_feat
    cdef unsigned char[:] dl_op = plan.dl_op
    cdef double[:] dl_lo = plan.dl_lo
    cdef double[:] dl_hi = plan.dl_hi
    cdef int[:] dn_lit_start = plan.dn_lit_start
    cdef int[:] dn_lit_end = plan.dn_lit_end
    cdef int[:] dn_child_start = plan.dn_child_start
    cdef int[:] dn_child_end = plan.dn_child_end
    cdef int n_roots = plan.n_roots

    cdef int[:] cl_feat = plan.cl_feat
    cdef unsigned char[:] cl_op = plan.cl_op
    cdef double[:] cl_lo = plan.cl_lo
    cdef double[:] cl_hi = plan.cl_hi
    cdef int[:] cr_ant_start = plan.cr_ant_start
    cdef int[:] cr_ant_end = plan.cr_ant_end
    cdef int[:] cr_cons = plan.cr_cons
    cdef int[:] cr_cons_feat = plan.cr_cons_feat
    cdef int[:] cr_antfeat_start = plan.cr_antfeat_start
    cdef int[:] cr_antfeat_end = plan.cr_antfeat_end
    cdef int[:] antfeat = plan.antfeat
    cdef int n_rules = plan.cr_cons.shape[0]

    valid_arr = np.zeros(m, dtype=np.uint8)
    cost_arr = np.zeros(m, dtype=np.float64)
    direct_arr = np.zeros(m, dtype=np.int32)
    cdef unsigned char[:] valid = valid_arr
    cdef double[:] cost = cost_arr
    cdef int[:] n_direct = direct_arr

    changed_buf = np.zeros(n, dtype=np.uint8)
    induced_buf = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[:] changed = changed_buf
    cdef unsigned char[:] induced = induced_buf

    cdef int r, j, ri, i, f, a, direct_count
    cdef bint progressed, triggered, ant_changed, consistent, compliant, ok
    cdef double total, w, d

    with nogil:
        for r in range(m):
            for j in range(n):
                changed[j] = X[r, j] != base[j]
                induced[j] = 0

            progressed = True
            while progressed:
                progressed = False
                for ri in range(n_rules):
                    f = cr_cons_feat[ri]
                    if not changed[f] or induced[f]:
                        continue
                    triggered = True
                    for i in range(cr_ant_start[ri], cr_ant_end[ri]):
                        if not _lit_holds(X[r, cl_feat[i]], cl_op[i], cl_lo[i], cl_hi[i]):
                            triggered = False
                            break
                    if not triggered:
                        continue
                    ant_changed = False
                    for a in range(cr_antfeat_start[ri], cr_antfeat_end[ri]):
                        if changed[antfeat[a]]:
                            ant_changed = True
                            break
                    if not ant_changed:
                        continue
                    i = cr_cons[ri]
                    if _lit_holds(X[r, cl_feat[i]], cl_op[i], cl_lo[i], cl_hi[i]) and not \
                            _lit_holds(base[cl_feat[i]], cl_op[i], cl_lo[i], cl_hi[i]):
                        induced[f] = 1
                        progressed = True

            consistent = True
            for ri in range(n_rules):
                triggered = True
                for i in range(cr_ant_start[ri], cr_ant_end[ri]):
                    if not _lit_holds(X[r, cl_feat[i]], cl_op[i], cl_lo[i], cl_hi[i]):
                        triggered = False
                        break
                if triggered:
                    i = cr_cons[ri]
                    if not _lit_holds(X[r, cl_feat[i]], cl_op[i], cl_lo[i], cl_hi[i]):
                        consistent = False
                        break

            compliant = False
            for i in range(n_roots):
                if _node_fires(X, r, i, dl_feat, dl_op, dl_lo, dl_hi,
                               dn_lit_start, dn_lit_end, dn_child_start, dn_child_end):
                    compliant = True
                    break

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
                if adjusted and induced[j]:
                    w = 0.0
                else:
                    w = weights[j]
                if p == 0:
                    total += w
                else:
                    if kinds[j] == KIND_CATEGORICAL:
                        d = 1.0
                    else:
                        d = (X[r, j] - base[j]) / norm[j]
                    if p == 1:
                        total += w * fabs(d)
                    else:
                        total += w * (d * d)

            valid[r] = 1 if ok else 0
            cost[r] = total
            n_direct[r] = direct_count

    return valid_arr, cost_arr, direct_arr
