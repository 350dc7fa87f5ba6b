# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled execution kernels.

Mirrors fallback.py operation for operation; the arithmetic (operation order,
libm calls, error codes) must stay in lockstep with that module.
"""

from libc.math cimport exp, log, sqrt, pow, sin, cos, fabs, floor, isfinite

import numpy as np

BACKEND_NAME = "compiled"

DEF OP_CONST = 0
DEF OP_LOADX = 1
DEF OP_LOADU = 2
DEF OP_ADD = 3
DEF OP_SUB = 4
DEF OP_MUL = 5
DEF OP_DIV = 6
DEF OP_NEG = 7
DEF OP_ABS = 8
DEF OP_SIGN = 9
DEF OP_EXP = 10
DEF OP_LN = 11
DEF OP_SQRT = 12
DEF OP_POW = 13
DEF OP_MIN = 14
DEF OP_MAX = 15
DEF OP_SIN = 16
DEF OP_COS = 17

DEF ERR_NONE = 0
DEF ERR_DIV_ZERO = 1
DEF ERR_LN_DOMAIN = 2
DEF ERR_SQRT_DOMAIN = 3
DEF ERR_POW_DOMAIN = 4
DEF ERR_OVERFLOW = 5


cdef int _run(const int* code, const double* operand, Py_ssize_t length,
              const double* x, const double* u, double* stack,
              double* result, double* errval) noexcept nogil:
    cdef Py_ssize_t i, sp = 0
    cdef int op
    cdef double a, b, r
    for i in range(length):
        op = code[i]
        if op == OP_CONST:
            stack[sp] = operand[i]
            sp += 1
        elif op == OP_LOADX:
            stack[sp] = x[<Py_ssize_t> operand[i]]
            sp += 1
        elif op == OP_LOADU:
            stack[sp] = u[<Py_ssize_t> operand[i]]
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            r = stack[sp - 1] + stack[sp]
            if not isfinite(r):
                errval[0] = r
                return ERR_OVERFLOW
            stack[sp - 1] = r
        elif op == OP_SUB:
            sp -= 1
            r = stack[sp - 1] - stack[sp]
            if not isfinite(r):
                errval[0] = r
                return ERR_OVERFLOW
            stack[sp - 1] = r
        elif op == OP_MUL:
            sp -= 1
            r = stack[sp - 1] * stack[sp]
            if not isfinite(r):
                errval[0] = r
                return ERR_OVERFLOW
            stack[sp - 1] = r
        elif op == OP_DIV:
            sp -= 1
            b = stack[sp]
            if b == 0.0:
                errval[0] = b
                return ERR_DIV_ZERO
            r = stack[sp - 1] / b
            if not isfinite(r):
                errval[0] = r
                return ERR_OVERFLOW
            stack[sp - 1] = r
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_ABS:
            stack[sp - 1] = fabs(stack[sp - 1])
        elif op == OP_SIGN:
            a = stack[sp - 1]
            stack[sp - 1] = <double> ((a > 0.0) - (a < 0.0))
        elif op == OP_EXP:
            a = stack[sp - 1]
            r = exp(a)
            if not isfinite(r):
                errval[0] = a
                return ERR_OVERFLOW
            stack[sp - 1] = r
        elif op == OP_LN:
            a = stack[sp - 1]
            if a <= 0.0:
                errval[0] = a
                return ERR_LN_DOMAIN
            stack[sp - 1] = log(a)
        elif op == OP_SQRT:
            a = stack[sp - 1]
            if a < 0.0:
                errval[0] = a
                return ERR_SQRT_DOMAIN
            stack[sp - 1] = sqrt(a)
        elif op == OP_POW:
            sp -= 1
            a = stack[sp - 1]
            b = stack[sp]
            if a < 0.0 and b != floor(b):
                errval[0] = a
                return ERR_POW_DOMAIN
            if a == 0.0 and b < 0.0:
                errval[0] = a
                return ERR_DIV_ZERO
            r = pow(a, b)
            if not isfinite(r):
                errval[0] = a
                return ERR_OVERFLOW
            stack[sp - 1] = r
        elif op == OP_MIN:
            sp -= 1
            b = stack[sp]
            if b < stack[sp - 1]:
                stack[sp - 1] = b
        elif op == OP_MAX:
            sp -= 1
            b = stack[sp]
            if b > stack[sp - 1]:
                stack[sp - 1] = b
        elif op == OP_SIN:
            stack[sp - 1] = sin(stack[sp - 1])
        elif op == OP_COS:
            stack[sp - 1] = cos(stack[sp - 1])
    result[0] = stack[0]
    return ERR_NONE


def eval_one(const int[::1] code, const double[::1] operand, int stack_need,
             const double[::1] x, const double[::1] u):
    cdef double dummy = 0.0
    cdef const double* xp = &dummy if x.shape[0] == 0 else &x[0]
    cdef const double* up = &dummy if u.shape[0] == 0 else &u[0]
    stack_arr = np.empty(stack_need)
    cdef double[::1] stack = stack_arr
    cdef double result = 0.0, errval = 0.0
    cdef int err
    err = _run(&code[0], &operand[0], code.shape[0], xp, up, &stack[0],
               &result, &errval)
    if err != ERR_NONE:
        return 0.0, err, errval
    return result, ERR_NONE, 0.0


def eval_many(const int[::1] code, const double[::1] operand, int stack_need,
              const double[:, ::1] X, const double[:, ::1] U):
    cdef Py_ssize_t n_rows = X.shape[0]
    out_arr = np.empty(n_rows)
    err_arr = np.zeros(n_rows, dtype=np.int32)
    stack_arr = np.empty(stack_need)
    cdef double[::1] out = out_arr
    cdef int[::1] err = err_arr
    cdef double[::1] stack = stack_arr
    cdef double dummy = 0.0
    cdef const double* xp
    cdef const double* up
    cdef double result = 0.0, errval = 0.0
    cdef Py_ssize_t i
    cdef int e
    with nogil:
        for i in range(n_rows):
            xp = &dummy if X.shape[1] == 0 else &X[i, 0]
            up = &dummy if U.shape[1] == 0 else &U[i, 0]
            e = _run(&code[0], &operand[0], code.shape[0], xp, up, &stack[0],
                     &result, &errval)
            err[i] = e
            out[i] = result if e == ERR_NONE else 0.0
    return out_arr, err_arr


def rk4_segment(const int[::1] code, const double[::1] operand,
                const int[::1] offsets, int stack_need,
                const double[::1] x0, const double[::1] hs,
                const double[:, :, ::1] u_stages):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t steps = hs.shape[0]
    cdef Py_ssize_t m = u_stages.shape[2]
    out_arr = np.empty((steps, n))
    cdef double[:, ::1] out = out_arr
    work_arr = np.empty(6 * n + stack_need)
    cdef double[::1] work = work_arr
    cdef double* x = &work[0]
    cdef double* k1 = &work[n]
    cdef double* k2 = &work[2 * n]
    cdef double* k3 = &work[3 * n]
    cdef double* k4 = &work[4 * n]
    cdef double* xs = &work[5 * n]
    cdef double* stack = &work[6 * n]
    cdef double dummy = 0.0
    cdef const double* u0
    cdef const double* u1
    cdef const double* u2
    cdef Py_ssize_t s, j
    cdef Py_ssize_t err_step = -1
    cdef double h, h6, v, xj, errval = 0.0
    cdef int e, err_code = ERR_NONE
    cdef bint bad
    for j in range(n):
        x[j] = x0[j]
    with nogil:
        for s in range(steps):
            h = hs[s]
            if m == 0:
                u0 = &dummy
                u1 = &dummy
                u2 = &dummy
            else:
                u0 = &u_stages[s, 0, 0]
                u1 = &u_stages[s, 1, 0]
                u2 = &u_stages[s, 2, 0]
            for j in range(n):
                e = _run(&code[offsets[j]], &operand[offsets[j]],
                         offsets[j + 1] - offsets[j], x, u0, stack, &v, &errval)
                if e != ERR_NONE:
                    err_code = e
                    break
                k1[j] = v
            if err_code != ERR_NONE:
                err_step = s
                break
            for j in range(n):
                xs[j] = x[j] + 0.5 * h * k1[j]
            for j in range(n):
                e = _run(&code[offsets[j]], &operand[offsets[j]],
                         offsets[j + 1] - offsets[j], xs, u1, stack, &v, &errval)
                if e != ERR_NONE:
                    err_code = e
                    break
                k2[j] = v
            if err_code != ERR_NONE:
                err_step = s
                break
            for j in range(n):
                xs[j] = x[j] + 0.5 * h * k2[j]
            for j in range(n):
                e = _run(&code[offsets[j]], &operand[offsets[j]],
                         offsets[j + 1] - offsets[j], xs, u1, stack, &v, &errval)
                if e != ERR_NONE:
                    err_code = e
                    break
                k3[j] = v
            if err_code != ERR_NONE:
                err_step = s
                break
            for j in range(n):
                xs[j] = x[j] + h * k3[j]
            for j in range(n):
                e = _run(&code[offsets[j]], &operand[offsets[j]],
                         offsets[j + 1] - offsets[j], xs, u2, stack, &v, &errval)
                if e != ERR_NONE:
                    err_code = e
                    break
                k4[j] = v
            if err_code != ERR_NONE:
                err_step = s
                break
            h6 = h / 6.0
            bad = False
            for j in range(n):
                xj = x[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                if not isfinite(xj):
                    bad = True
                x[j] = xj
                out[s, j] = xj
            if bad:
                err_code = ERR_OVERFLOW
                err_step = s
                break
    return out_arr, err_code, err_step
