"""Pure-Python kernels. Same contract as the compiled ``_kernels`` module.

Residual rows are ``array('q')`` buffers whose index 0 is an unused zero slot.
"""

from __future__ import annotations


def backward_probe(row, deadline, prev_deadline, need):
    """Simulate fetching ``need`` bytes from ``deadline`` backward.

    Returns ``(cost, stop, take_at_stop)`` where ``cost`` counts bytes taken in
    slots ``<= prev_deadline``; ``cost == -1`` when slot 1 is passed with bytes
    still missing.  ``row`` is not modified.
    """
    if need <= 0:
        return 0, deadline, 0
    cost = 0
    j = deadline
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


def backward_commit(row, deadline, stop, take_at_stop):
    """Apply a successful probe: slots after ``stop`` up to ``deadline`` are
    drained and ``take_at_stop`` bytes are removed from slot ``stop``."""
    for j in range(stop + 1, deadline + 1):
        row[j] = 0
    row[stop] -= take_at_stop


def best_assignment(opt_bytes, opt_value, opt_start, caps, links):
    """Exhaustive search for the best per-chunk option vector.

    Chunk ``i`` (0-based) owns options ``opt_start[i] .. opt_start[i+1]-1``;
    option ``o`` demands ``opt_bytes[o*links + k]`` bytes on link ``k`` and is
    worth ``opt_value[o]``.  A choice is feasible iff for every chunk ``i`` and
    link ``k`` the cumulative demand of chunks ``0..i`` stays within
    ``caps[i*links + k]``.  Returns ``(value, choices)`` for the first-found
    maximum in depth-first option order, or ``(None, None)`` if nothing is
    feasible.
    """
    C = len(opt_start) - 1
    if C == 0:
        return 0, []
    suffix = [0] * (C + 1)
    for i in range(C - 1, -1, -1):
        suffix[i] = suffix[i + 1] + max(
            opt_value[o] for o in range(opt_start[i], opt_start[i + 1])
        )
    best_value = None
    best_choice = None
    choice = [0] * C
    used = [0] * links

    def dfs(i, value):
        nonlocal best_value, best_choice
        if i == C:
            if best_value is None or value > best_value:
                best_value = value
                best_choice = list(choice)
            return
        if best_value is not None and value + suffix[i] <= best_value:
            return
        base = i * links
        for o in range(opt_start[i], opt_start[i + 1]):
            ob = o * links
            ok = True
            for k in range(links):
                if used[k] + opt_bytes[ob + k] > caps[base + k]:
                    ok = False
                    break
            if not ok:
                continue
            for k in range(links):
                used[k] += opt_bytes[ob + k]
            choice[i] = o - opt_start[i]
            dfs(i + 1, value + opt_value[o])
            for k in range(links):
                used[k] -= opt_bytes[ob + k]

    dfs(0, 0)
    return best_value, best_choice
