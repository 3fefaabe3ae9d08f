# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Same contract as ``_kernels_py``."""

from libc.stdlib cimport malloc, free


def backward_probe(long long[::1] row, Py_ssize_t deadline,
                   Py_ssize_t prev_deadline, long long need):
    cdef long long cost = 0
    cdef long long avail, take
    cdef Py_ssize_t j = deadline
    if need <= 0:
        return 0, deadline, 0
    while j >= 1:
        avail = row[j]
        if avail:
            take = avail if avail < need else need
            need -= take
            if j <= prev_deadline:
                cost += take
            if need == 0:
                return cost, j, take
        j -= 1
    return -1, 0, 0


def backward_commit(long long[::1] row, Py_ssize_t deadline,
                    Py_ssize_t stop, long long take_at_stop):
    cdef Py_ssize_t j
    for j in range(stop + 1, deadline + 1):
        row[j] = 0
    row[stop] -= take_at_stop


cdef struct Search:
    Py_ssize_t C
    Py_ssize_t K
    long long *opt_bytes
    long long *opt_value
    Py_ssize_t *opt_start
    long long *caps
    long long *suffix
    long long *used
    Py_ssize_t *choice
    Py_ssize_t *best_choice
    long long best_value
    bint found


cdef void _dfs(Search *s, Py_ssize_t i, long long value) noexcept nogil:
    cdef Py_ssize_t o, k, ob, base
    cdef bint ok
    if i == s.C:
        if not s.found or value > s.best_value:
            s.found = True
            s.best_value = value
            for k in range(s.C):
                s.best_choice[k] = s.choice[k]
        return
    if s.found and value + s.suffix[i] <= s.best_value:
        return
    base = i * s.K
    for o in range(s.opt_start[i], s.opt_start[i + 1]):
        ob = o * s.K
        ok = True
        for k in range(s.K):
            if s.used[k] + s.opt_bytes[ob + k] > s.caps[base + k]:
                ok = False
                break
        if not ok:
            continue
        for k in range(s.K):
            s.used[k] += s.opt_bytes[ob + k]
        s.choice[i] = o - s.opt_start[i]
        _dfs(s, i + 1, value + s.opt_value[o])
        for k in range(s.K):
            s.used[k] -= s.opt_bytes[ob + k]


def best_assignment(opt_bytes, opt_value, opt_start, caps, Py_ssize_t links):
    cdef Py_ssize_t C = len(opt_start) - 1
    cdef Py_ssize_t n_opt = len(opt_value)
    cdef Py_ssize_t i, o
    cdef long long m
    cdef Search s
    if C == 0:
        return 0, []
    s.C = C
    s.K = links
    s.found = False
    s.best_value = 0
    s.opt_bytes = <long long *> malloc(n_opt * links * sizeof(long long))
    s.opt_value = <long long *> malloc(n_opt * sizeof(long long))
    s.opt_start = <Py_ssize_t *> malloc((C + 1) * sizeof(Py_ssize_t))
    s.caps = <long long *> malloc(C * links * sizeof(long long))
    s.suffix = <long long *> malloc((C + 1) * sizeof(long long))
    s.used = <long long *> malloc(links * sizeof(long long))
    s.choice = <Py_ssize_t *> malloc(C * sizeof(Py_ssize_t))
    s.best_choice = <Py_ssize_t *> malloc(C * sizeof(Py_ssize_t))
    try:
        for o in range(n_opt * links):
            s.opt_bytes[o] = opt_bytes[o]
        for o in range(n_opt):
            s.opt_value[o] = opt_value[o]
        for i in range(C + 1):
            s.opt_start[i] = opt_start[i]
        for i in range(C * links):
            s.caps[i] = caps[i]
        for i in range(links):
            s.used[i] = 0
        s.suffix[C] = 0
        for i in range(C - 1, -1, -1):
            m = s.opt_value[s.opt_start[i]]
            for o in range(s.opt_start[i], s.opt_start[i + 1]):
                if s.opt_value[o] > m:
                    m = s.opt_value[o]
            s.suffix[i] = s.suffix[i + 1] + m
        with nogil:
            _dfs(&s, 0, 0)
        if not s.found:
            return None, None
        return s.best_value, [s.best_choice[i] for i in range(C)]
    finally:
        free(s.opt_bytes)
        free(s.opt_value)
        free(s.opt_start)
        free(s.caps)
        free(s.suffix)
        free(s.used)
        free(s.choice)
        free(s.best_choice)
