# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the derandomized shift sweep.

Mirrors ultraskel.ramsey.evaluate_shift: for each shift it runs every carving
stage (greedy argmax(A - B) ball carving with incremental updates after each
deletion) and accumulates the surviving w1 mass.
"""
from libc.math cimport pow
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF MAX_STAGES = 1200  # sigma <= 1/e, so float64 scales need < ~720 stages


cdef inline int _lower_count(double* sd, int n, double t) nogil:
    """Number of entries of the sorted array sd that are <= t."""
    cdef int lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if sd[mid] <= t:
            lo = mid + 1
        else:
            hi = mid
    return lo


def sweep_scores(
    cnp.ndarray[cnp.float64_t, ndim=2] dist,
    cnp.ndarray[cnp.float64_t, ndim=1] w1,
    cnp.ndarray[cnp.float64_t, ndim=1] w2,
    double epsilon,
    cnp.ndarray[cnp.float64_t, ndim=1] deltas,
):
    cdef int n = dist.shape[0]
    cdef int m = deltas.shape[0]
    cdef double sigma = pow(1.0 - epsilon, 1.0 / epsilon)
    cdef double D = 2.0 / (epsilon * pow(1.0 - epsilon, (1.0 - epsilon) / epsilon))

    cdef cnp.ndarray[cnp.float64_t, ndim=1] scores = np.empty(m)
    cdef double[:, ::1] d = np.ascontiguousarray(dist)
    cdef double[::1] w1v = np.ascontiguousarray(w1)
    cdef double[::1] w2v = np.ascontiguousarray(w2)

    # per-point sorted distances and w2 prefix sums for ball masses
    order = np.argsort(dist, axis=1, kind="stable")
    cdef double[:, ::1] sdist = np.ascontiguousarray(
        np.take_along_axis(dist, order, axis=1)
    )
    cdef double[:, ::1] csum = np.ascontiguousarray(
        np.cumsum(np.take_along_axis(np.broadcast_to(w2, (n, n)), order, axis=1), axis=1)
    )

    cdef double min_dist = 0.0
    if n > 1:
        min_dist = float(np.min(dist[np.triu_indices(n, 1)]))

    cdef double* f = <double*> malloc(n * sizeof(double))
    cdef double* g = <double*> malloc(n * sizeof(double))
    cdef double* b = <double*> malloc(n * sizeof(double))
    cdef double* A = <double*> malloc(n * sizeof(double))
    cdef double* B = <double*> malloc(n * sizeof(double))
    cdef double* rat = <double*> malloc(n * sizeof(double))
    cdef char* alive = <char*> malloc(n)
    cdef char* captured = <char*> malloc(n)
    cdef int* cap_cnt = <int*> malloc(n * sizeof(int))
    cdef double* rr = <double*> malloc(MAX_STAGES * sizeof(double))
    cdef double* RR = <double*> malloc(MAX_STAGES * sizeof(double))
    if not (f and g and b and A and B and rat and alive and captured and cap_cnt and rr and RR):
        raise MemoryError()

    cdef int qi, x, y, z, stage, best, n_alive, n_stages
    cdef double delta, r, R, rprev, br, bR, margin, bestval, score

    try:
        for qi in range(m):
            delta = deltas[qi]
            n_stages = 0
            stage = 1
            while n_stages < MAX_STAGES:
                if stage == 1:
                    r = pow(sigma, delta)
                    rprev = 1.0
                else:
                    r = pow(sigma, stage - 1 + delta)
                    rprev = pow(sigma, stage - 2 + delta)
                R = r + 2.0 * rprev / D
                if R < min_dist:
                    break
                rr[n_stages] = r
                RR[n_stages] = R
                n_stages += 1
                stage += 1

            for x in range(n):
                f[x] = w1v[x] / w2v[x]
                alive[x] = 1
            for stage in range(n_stages):
                for x in range(n):
                    br = csum[x, _lower_count(&sdist[x, 0], n, rr[stage]) - 1]
                    bR = csum[x, _lower_count(&sdist[x, 0], n, RR[stage]) - 1]
                    f[x] *= br / bR

            n_alive = n
            for stage in range(n_stages):
                r = rr[stage]
                R = RR[stage]
                for x in range(n):
                    if alive[x]:
                        br = csum[x, _lower_count(&sdist[x, 0], n, r) - 1]
                        bR = csum[x, _lower_count(&sdist[x, 0], n, R) - 1]
                        rat[x] = bR / br
                        g[x] = rat[x] * f[x] * w2v[x]
                        b[x] = f[x] * w2v[x]
                for y in range(n):
                    A[y] = 0.0
                    B[y] = 0.0
                    cap_cnt[y] = 0
                for y in range(n):
                    for x in range(n):
                        if alive[x]:
                            if d[y, x] <= r:
                                A[y] += g[x]
                                cap_cnt[y] += 1
                            if d[y, x] <= R:
                                B[y] += b[x]
                for x in range(n):
                    captured[x] = 0
                while n_alive > 0:
                    best = -1
                    bestval = 0.0
                    for y in range(n):
                        if cap_cnt[y] > 0:
                            margin = A[y] - B[y]
                            if best < 0 or margin > bestval:
                                best = y
                                bestval = margin
                    for x in range(n):
                        if alive[x] and d[best, x] <= r:
                            captured[x] = 1
                    for x in range(n):
                        if alive[x] and d[best, x] <= R:
                            alive[x] = 0
                            n_alive -= 1
                            for z in range(n):
                                if d[x, z] <= r:
                                    A[z] -= g[x]
                                    cap_cnt[z] -= 1
                                if d[x, z] <= R:
                                    B[z] -= b[x]
                n_alive = 0
                for x in range(n):
                    alive[x] = captured[x]
                    if alive[x]:
                        n_alive += 1
                        br = csum[x, _lower_count(&sdist[x, 0], n, r) - 1]
                        bR = csum[x, _lower_count(&sdist[x, 0], n, R) - 1]
                        f[x] *= bR / br
                if n_alive == 0:
                    break

            score = 0.0
            for x in range(n):
                if alive[x]:
                    score += w1v[x]
            scores[qi] = score
    finally:
        free(f); free(g); free(b); free(A); free(B)
        free(rat); free(alive); free(captured); free(cap_cnt)
        free(rr); free(RR)
    return scores
