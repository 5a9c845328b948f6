# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

Two kernels: the summed two-piece log likelihood and a component-wise
random-walk Metropolis chain for two-piece posteriors whose prior is a power
law in the scales. Both consume caller-allocated buffers and pregenerated
random numbers so that the pure-Python mirror in `_pyloops` can follow the
exact same arithmetic.
"""

from libc.math cimport exp, log, pow, INFINITY

cdef double LOG2 = 0.6931471805599453
cdef double HALF_LOG_2PI = 0.9189385332046727


cdef double _loglik_sum(const double[::1] y, double mu, double s1, double s2) noexcept nogil:
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double acc = 0.0
    cdef double z
    cdef double c = LOG2 - log(s1 + s2) - HALF_LOG_2PI
    for i in range(n):
        if y[i] < mu:
            z = (y[i] - mu) / s1
        else:
            z = (y[i] - mu) / s2
        acc += c - 0.5 * z * z
    return acc


def twopiece_loglik_sum(const double[::1] y, double mu, double s1, double s2):
    """Sum of two-piece location-scale log densities over the dataset.

    Returns -inf when either scale is non-positive.
    """
    if s1 <= 0.0 or s2 <= 0.0:
        return -INFINITY
    return _loglik_sum(y, mu, s1, s2)


cdef double _logtarget(const double[::1] y, double z0, double z1, double z2,
                       double p1, double p2, double q) noexcept nogil:
    # z = (mu, log s1, log s2); the caller folds the log-scale Jacobian into p1, p2
    cdef double s1 = exp(z1)
    cdef double s2 = exp(z2)
    return _loglik_sum(y, z0, s1, s2) + p1 * z1 + p2 * z2 + q * log(s1 + s2)


def twopiece_power_chain(const double[::1] y,
                         const double[::1] z_init,
                         const double[::1] steps_init,
                         double p1, double p2, double q,
                         const double[:, ::1] normals,
                         const double[:, ::1] uniforms,
                         Py_ssize_t n_burn,
                         bint adapt,
                         double target_rate,
                         double[:, ::1] draws_out,
                         double[::1] logp_out,
                         double[:, ::1] steps_out):
    """Component-wise random-walk Metropolis in z = (mu, log s1, log s2).

    log target(z) = sum_i loglik(y_i | mu, e^{z1}, e^{z2}) + p1 z1 + p2 z2
                    + q log(e^{z1} + e^{z2}).

    normals/uniforms are (n_total, 3) pregenerated draws consumed one row per
    sweep, one column per component. During the first n_burn sweeps (when adapt
    is set) each component's log step size moves by 1.5/(t+10)^0.6 times
    (accept - target_rate). steps_out records the step sizes in force at each
    sweep. Returns (accepted proposals, longest run of consecutive rejections).
    """
    cdef Py_ssize_t n_total = normals.shape[0]
    cdef double z[3]
    cdef double ls[3]
    cdef double cur, prop, zj_old, gain
    cdef Py_ssize_t t, j
    cdef long accepted = 0
    cdef long streak = 0
    cdef long max_streak = 0
    for j in range(3):
        z[j] = z_init[j]
        ls[j] = log(steps_init[j])
    cur = _logtarget(y, z[0], z[1], z[2], p1, p2, q)
    if not cur > -INFINITY:
        raise ValueError("log target not finite at the initial point")
    for t in range(n_total):
        for j in range(3):
            steps_out[t, j] = exp(ls[j])
        for j in range(3):
            zj_old = z[j]
            z[j] = zj_old + exp(ls[j]) * normals[t, j]
            prop = _logtarget(y, z[0], z[1], z[2], p1, p2, q)
            if prop - cur > log(uniforms[t, j]):
                cur = prop
                accepted += 1
                streak = 0
                if adapt and t < n_burn:
                    gain = 1.5 / pow(t + 10.0, 0.6)
                    ls[j] += gain * (1.0 - target_rate)
            else:
                z[j] = zj_old
                streak += 1
                if streak > max_streak:
                    max_streak = streak
                if adapt and t < n_burn:
                    gain = 1.5 / pow(t + 10.0, 0.6)
                    ls[j] -= gain * target_rate
        draws_out[t, 0] = z[0]
        draws_out[t, 1] = z[1]
        draws_out[t, 2] = z[2]
        logp_out[t] = cur
    return accepted, max_streak
