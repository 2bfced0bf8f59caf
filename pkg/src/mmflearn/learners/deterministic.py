"""
    Learners for noiseless feedback: a dyadic grid sweep and a bisection search on the unit demand.

    A threshold is counted as met when the reward is >= alpha in both learners.
"""

import math


def grid_point(q, udmax):
    """ Probe for bracket q: odd dyadic points, depth by depth, left to right. """
    if q < 1:
        raise ValueError('bracket index starts at 1')
    h = int(q).bit_length()  # == ceil(log2(q + 1)) without float rounding
    k = 2 * q - 2 ** h + 1
    return udmax * k / 2 ** h


def rprime_det_sp(q, n):
    return n * q


def rprime_det(q):
    return math.floor(math.exp(q))


class GridState:
    """ Keeps only an upper bound: the smallest probe at which the threshold was met. """

    def __init__(self, udmax, alpha):
        self.udmax = udmax
        self.alpha = alpha
        self.ud_ub = udmax

    def begin_round(self, t):
        pass

    def record(self, normalloc, reward, sigma=0.0):
        normalloc = min(max(normalloc, 0.0), self.udmax)
        if reward >= self.alpha:
            self.ud_ub = min(self.ud_ub, normalloc)

    def get_ud_ub(self):
        return self.ud_ub

    def interval(self):
        return None

    def snapshot(self):
        return {'ud_ub': self.ud_ub}


def grid_record(state, normalloc, reward):
    state.record(normalloc, reward)
    return state


class BinarySearchState:
    """ Lower/upper bounds on the unit demand, narrowed from whichever side the reward lands. """

    def __init__(self, udmax, alpha):
        self.udmax = udmax
        self.alpha = alpha
        self.ud_lb = 0.0
        self.ud_ub = udmax

    def begin_round(self, t):
        pass

    def get_ud_rec(self):
        return 0.5 * (self.ud_lb + self.ud_ub)

    # exploration probes in the bracketed mechanism use the same midpoint
    get_ud_rec_for_ub = get_ud_rec

    def get_ud_ub(self):
        return self.ud_ub

    def record(self, normalloc, reward, sigma=0.0):
        normalloc = min(max(normalloc, 0.0), self.udmax)
        if reward < self.alpha:
            self.ud_lb = max(self.ud_lb, normalloc)
        else:
            self.ud_ub = min(self.ud_ub, normalloc)

    def interval(self):
        return self.ud_lb, self.ud_ub

    def snapshot(self):
        return {'ud_lb': self.ud_lb, 'ud_ub': self.ud_ub}


def bs_get_rec(state):
    return state.get_ud_rec()


def bs_record(state, normalloc, reward):
    state.record(normalloc, reward)
    return state
