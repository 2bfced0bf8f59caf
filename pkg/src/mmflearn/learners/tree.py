"""
    Nonparametric estimator on a dyadic tree over [0, udmax].

    Node (h, k) covers [udmax (k-1) / 2^h, udmax k / 2^h), closed on the right when k = 2^h.
    Each node keeps the inverse-variance mass VS of the data assigned to it, the weighted mean
    f_bar, a per-node band f_bar -/+ (beta / sqrt(VS) + L 2^-h), and a propagated band
    [B_lb, B_ub] that uses monotonicity of the payoff across the tree.

    ``nodes`` holds every node of the expanded tree: internal nodes and leaves. A leaf is
    expanded by adding its two children. Within each height the rows of B_lb and B_ub are kept
    non-decreasing in k.
"""

from bisect import bisect_left, bisect_right, insort
import math

from ..mmf import ValidationError

BETA_CONST = 4.0 + 2.0 * math.log(2.0)


def node_interval(h, k, udmax):
    """ (left, right, right_closed) """
    return udmax * (k - 1) / 2 ** h, udmax * k / 2 ** h, k == 2 ** h


def t_tilde(t):
    if t < 1:
        raise ValueError('rounds start at 1')
    return 1 << (int(t) - 1).bit_length()


def tree_beta(t, n, delta):
    arg = n * math.pi ** 2 * t ** 3 / (6.0 * delta)
    return math.sqrt(BETA_CONST * max(math.log(arg), 0.0))


def tau(h, t, L, n, delta):
    return tree_beta(t, n, delta) ** 2 * 4.0 ** h / L ** 2


def rprime_tree(q, n):
    return math.floor(5.0 * n * math.sqrt(q) / 6.0)


class Node:
    __slots__ = ('VS', 'f_bar', 'f_lb', 'f_ub', 'B_lb', 'B_ub', 'internal')

    def __init__(self, B_lb=0.0, B_ub=1.0):
        self.VS = 0.0
        self.f_bar = 0.0
        self.f_lb = -math.inf
        self.f_ub = math.inf
        self.B_lb = B_lb
        self.B_ub = B_ub
        self.internal = False


class TreeState:

    def __init__(self, L, udmax, alpha, n_agents, delta=1e-3, beta_scale=1.0,
                 trace=None, debug=False):
        if L <= 0 or udmax <= 0:
            raise ValidationError('L and udmax must be positive', field='L')
        self.L = L
        self.udmax = udmax
        self.alpha = alpha
        self.n_agents = n_agents
        self.delta = delta
        self.beta_scale = beta_scale
        self.trace = trace
        self.debug = debug
        self.nodes = {(0, 1): Node()}
        self.rows = {0: [1]}
        self.hmax = 0
        self.hub_kub = (0, 1)
        self.t = 1
        self.t_tilde = 1
        self.beta = 0.0
        self._tau0 = 0.0
        self.n_records = 0
        self.expansions = []
        self._set_round(1)
        expand_node(self, 0, 1)

    def _set_round(self, t):
        self.t = t
        self.t_tilde = t_tilde(t)
        self.beta = self.beta_scale * tree_beta(self.t_tilde, self.n_agents, self.delta)
        beta_t = self.beta_scale * tree_beta(t, self.n_agents, self.delta)
        self._tau0 = beta_t ** 2 / self.L ** 2

    def tau(self, h):
        return self._tau0 * 4.0 ** h

    def emit(self, event, h, k):
        if self.trace is None:
            return
        nd = self.nodes[(h, k)]
        self.trace(f'{self.t} {event} {h} {k} {nd.VS!r} {nd.f_bar!r} {nd.B_lb!r} {nd.B_ub!r}')


# single-node helpers ------------------------------------------------------------------------

def _set_band(state, nd, h):
    if nd.VS > 0:
        width = state.beta / math.sqrt(nd.VS) + state.L * 2.0 ** -h
        nd.f_lb = nd.f_bar - width
        nd.f_ub = nd.f_bar + width


def _assign(state, h, k, x, sigma):
    nd = state.nodes[(h, k)]
    w = sigma ** -2
    if nd.VS == 0:
        nd.f_bar = x
        nd.VS = w
    else:
        nd.f_bar = (nd.VS * nd.f_bar + x * w) / (nd.VS + w)
        nd.VS += w
    _set_band(state, nd, h)
    return nd


def _repair_row(state, h, k):
    """ Push a node's bounds sideways so its row stays monotone; stop at the first no-op. """
    row = state.rows[h]
    nodes = state.nodes
    i = bisect_left(row, k)
    nd = nodes[(h, k)]
    for j in range(i + 1, len(row)):
        other = nodes[(h, row[j])]
        if other.B_lb < nd.B_lb:
            other.B_lb = nd.B_lb
        else:
            break
    for j in range(i - 1, -1, -1):
        other = nodes[(h, row[j])]
        if other.B_ub > nd.B_ub:
            other.B_ub = nd.B_ub
        else:
            break


# tree operations ----------------------------------------------------------------------------

def bounds_for_unexpanded(state, h, k):
    """ Bounds on f over a node outside the tree, from its nearest tree neighbours at each
    height from h down to the deepest one. """
    lo, hi = 0.0, 1.0
    nodes, rows = state.nodes, state.rows
    while h <= state.hmax:
        row = rows.get(h)
        if row:
            i = bisect_left(row, k)
            if i > 0:
                lo = max(lo, nodes[(h, row[i - 1])].B_lb)
            j = bisect_right(row, k)
            if j < len(row):
                hi = min(hi, nodes[(h, row[j])].B_ub)
        h, k = h + 1, 2 * k - 1
    return lo, hi


def expand_node(state, h, k):
    lo, hi = bounds_for_unexpanded(state, h + 1, 2 * k - 1)
    nd = state.nodes[(h, k)]
    nd.internal = True
    state.expansions.append((h, k, nd.VS, state.tau(h)))
    row = state.rows.setdefault(h + 1, [])
    for kk in (2 * k - 1, 2 * k):
        state.nodes[(h + 1, kk)] = Node(lo, hi)
        insort(row, kk)
    state.hmax = max(state.hmax, h + 1)
    for kk in (2 * k - 1, 2 * k):
        _repair_row(state, h + 1, kk)
        state.emit('expand', h + 1, kk)


def update_bounds_on_path(state, h, k):
    nodes = state.nodes
    nd = nodes[(h, k)]
    if not nd.internal:
        lo, hi = bounds_for_unexpanded(state, h + 1, 2 * k - 1)
        nd.B_lb = max(nd.f_lb, nd.B_lb, lo)
        nd.B_ub = min(nd.f_ub, nd.B_ub, hi)
        _repair_row(state, h, k)
        h, k = h - 1, (k + 1) // 2
    while h >= 0:
        nd = nodes[(h, k)]
        nd.B_lb = max(nd.f_lb, nd.B_lb, nodes[(h + 1, 2 * k - 1)].B_lb)
        nd.B_ub = min(nd.f_ub, nd.B_ub, nodes[(h + 1, 2 * k)].B_ub)
        _repair_row(state, h, k)
        h, k = h - 1, (k + 1) // 2


def tree_record_fb(state, a, x, sigma):
    if not 0.0 <= a <= state.udmax:
        raise ValidationError(f'allocation {a} outside [0, {state.udmax}]', field='normalloc')
    if not sigma > 0:
        raise ValidationError('tree learner needs a positive sub-Gaussian constant',
                              field='sigma')
    h, k = 0, 1
    nodes = state.nodes
    while True:
        nd = _assign(state, h, k, x, sigma)
        state.emit('assign', h, k)
        if not (nd.internal and nd.VS >= state.tau(h)):
            break
        left, right, _ = node_interval(h, k, state.udmax)
        h, k = (h + 1, 2 * k - 1) if a < 0.5 * (left + right) else (h + 1, 2 * k)
    update_bounds_on_path(state, h, k)
    nd = nodes[(h, k)]
    if not nd.internal and nd.VS >= state.tau(h):
        expand_node(state, h, k)
    state.n_records += 1
    if state.debug:
        check_invariants(state)
    return state


def tree_refresh(state):
    nodes, rows = state.nodes, state.rows
    for (h, _), nd in nodes.items():
        _set_band(state, nd, h)
    for h in range(state.hmax, -1, -1):
        row = rows[h]
        running = 0.0
        for kk in row:
            nd = nodes[(h, kk)]
            if nd.internal:
                lo = nodes[(h + 1, 2 * kk - 1)].B_lb
            else:
                lo = bounds_for_unexpanded(state, h + 1, 2 * kk - 1)[0]
            nd.B_lb = max(running, nd.f_lb, nd.B_lb, lo)
            running = nd.B_lb
        running = 1.0
        for kk in reversed(row):
            nd = nodes[(h, kk)]
            if nd.internal:
                hi = nodes[(h + 1, 2 * kk)].B_ub
            else:
                hi = bounds_for_unexpanded(state, h + 1, 2 * kk - 1)[1]
            nd.B_ub = min(running, nd.f_ub, nd.B_ub, hi)
            running = nd.B_ub
    if state.trace is not None:
        for (h, k) in sorted(nodes):
            state.emit('refresh', h, k)
    if state.debug:
        check_invariants(state)
    return state


def _bval(state, nd):
    return min(nd.B_ub - state.alpha, state.alpha - nd.B_lb)


def tree_get_ud_rec(state):
    nodes = state.nodes
    h, k = 0, 1
    nd = nodes[(h, k)]
    while nd.internal and nd.VS >= state.tau(h):
        left, right = nodes[(h + 1, 2 * k - 1)], nodes[(h + 1, 2 * k)]
        # ties go left
        if _bval(state, left) >= _bval(state, right):
            h, k, nd = h + 1, 2 * k - 1, left
        else:
            h, k, nd = h + 1, 2 * k, right
    lo, hi, _ = node_interval(h, k, state.udmax)
    return 0.5 * (lo + hi)


def tree_ub_traverse(state):
    nodes = state.nodes
    h, k = 0, 1
    nd = nodes[(h, k)]
    while nd.internal and nd.VS >= state.tau(h):
        if nodes[(h + 1, 2 * k)].B_lb >= state.alpha:
            h, k = h + 1, 2 * k - 1
        else:
            h, k = h + 1, 2 * k
        nd = nodes[(h, k)]
    return h, k


def tree_get_ud_rec_for_ub(state):
    state.hub_kub = tree_ub_traverse(state)
    lo, hi, _ = node_interval(*state.hub_kub, state.udmax)
    return 0.5 * (lo + hi)


def tree_get_ud_ub(state):
    h, k = state.hub_kub
    return state.udmax * k / 2 ** h


def tree_conf_interval(state, a):
    nodes = state.nodes
    h, k = 0, 1
    lo, hi = 0.0, 1.0
    while (h, k) in nodes:
        nd = nodes[(h, k)]
        lo, hi = max(lo, nd.B_lb), min(hi, nd.B_ub)
        left, right, _ = node_interval(h, k, state.udmax)
        h, k = (h + 1, 2 * k - 1) if a < 0.5 * (left + right) else (h + 1, 2 * k)
    l2, u2 = bounds_for_unexpanded(state, h, k)
    return max(lo, l2), min(hi, u2)


def _cell_band(state, depth, c):
    """ Band on cell c (0-based) of depth ``depth``, which must exceed hmax. """
    nodes = state.nodes
    lo, hi = 0.0, 1.0
    h = 0
    while True:
        key = (h, (c >> (depth - h)) + 1)
        nd = nodes.get(key)
        if nd is None:
            break
        if nd.B_lb > lo:
            lo = nd.B_lb
        if nd.B_ub < hi:
            hi = nd.B_ub
        h += 1
    l2, u2 = bounds_for_unexpanded(state, *key)
    return max(lo, l2), min(hi, u2)


def tree_ud_interval(state):
    """ Interval on the unit demand implied by the band.

    The band is constant on cells of depth hmax + 1 and monotone in a, so the crossing cells
    are found by bisection. ud_lb is the right end of the last cell whose upper band is below
    alpha; ud_ub is the left end of the first cell whose lower band reaches alpha.
    """
    depth = state.hmax + 1
    ncells = 1 << depth
    width = state.udmax / ncells

    def first_cell(side):
        lo, hi = 0, ncells
        while lo < hi:
            mid = (lo + hi) // 2
            if _cell_band(state, depth, mid)[side] >= state.alpha:
                hi = mid
            else:
                lo = mid + 1
        return lo

    j_lb = first_cell(1)
    j_ub = first_cell(0)
    ud_lb = j_lb * width
    ud_ub = state.udmax if j_ub == ncells else j_ub * width
    return ud_lb, ud_ub


def check_invariants(state, tol=1e-9):
    """ Raises AssertionError on a broken row order, VS nesting or expansion gate. """
    nodes = state.nodes
    for h, row in state.rows.items():
        for k1, k2 in zip(row, row[1:]):
            a, b = nodes[(h, k1)], nodes[(h, k2)]
            if a.B_lb > b.B_lb or a.B_ub > b.B_ub:
                raise AssertionError(f'row {h} not monotone between k={k1} and k={k2}')
    for (h, k), nd in nodes.items():
        if not nd.internal:
            continue
        vs_children = nodes[(h + 1, 2 * k - 1)].VS + nodes[(h + 1, 2 * k)].VS
        if nd.VS + tol * max(nd.VS, 1.0) < vs_children:
            raise AssertionError(f'VS nesting broken at ({h}, {k})')
    for h, k, vs, threshold in state.expansions:
        if (h, k) != (0, 1) and vs < threshold:
            raise AssertionError(f'node ({h}, {k}) expanded with VS {vs} below {threshold}')


class TreeLearner(TreeState):
    """ User class for the nonparametric model. Bounds are refreshed when t reaches t_tilde. """

    def begin_round(self, t):
        self._set_round(t)
        if t == self.t_tilde and t > 1:
            tree_refresh(self)

    def record(self, normalloc, reward, sigma):
        a = min(max(normalloc, 0.0), self.udmax)
        tree_record_fb(self, a, reward, sigma)

    def get_ud_rec(self):
        return tree_get_ud_rec(self)

    def get_ud_rec_for_ub(self):
        return tree_get_ud_rec_for_ub(self)

    def get_ud_ub(self):
        return tree_get_ud_ub(self)

    def interval(self):
        return tree_ud_interval(self)

    def conf_interval(self, a):
        return tree_conf_interval(self, a)

    def snapshot(self):
        return {'n_nodes': len(self.nodes), 'hmax': self.hmax, 'hub_kub': self.hub_kub}
