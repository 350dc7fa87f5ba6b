"""Pure-Python execution kernels.

Reference implementation of the postfix instruction set used for compiled
expressions.  The Cython module ``_speedups`` mirrors the arithmetic of this
module operation for operation so both backends produce the same IEEE-754
results; any semantic change here must be made there as well.
"""

import math

import numpy as np

BACKEND_NAME = "python"

# Opcodes (duplicated as literals in _speedups.pyx).
OP_CONST = 0
OP_LOADX = 1
OP_LOADU = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_DIV = 6
OP_NEG = 7
OP_ABS = 8
OP_SIGN = 9
OP_EXP = 10
OP_LN = 11
OP_SQRT = 12
OP_POW = 13
OP_MIN = 14
OP_MAX = 15
OP_SIN = 16
OP_COS = 17

# Evaluation error codes.
ERR_NONE = 0
ERR_DIV_ZERO = 1
ERR_LN_DOMAIN = 2
ERR_SQRT_DOMAIN = 3
ERR_POW_DOMAIN = 4
ERR_OVERFLOW = 5

ERR_MESSAGES = {
    ERR_DIV_ZERO: "division by zero",
    ERR_LN_DOMAIN: "logarithm of a non-positive argument",
    ERR_SQRT_DOMAIN: "square root of a negative argument",
    ERR_POW_DOMAIN: "invalid power (negative base with non-integer exponent)",
    ERR_OVERFLOW: "overflow to a non-finite value",
}


def _run(code, operand, x, u, stack):
    """Execute one program; returns (value, errcode, offending operand)."""
    sp = 0
    for i in range(len(code)):
        op = code[i]
        if op == OP_CONST:
            stack[sp] = operand[i]
            sp += 1
        elif op == OP_LOADX:
            stack[sp] = x[int(operand[i])]
            sp += 1
        elif op == OP_LOADU:
            stack[sp] = u[int(operand[i])]
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            r = stack[sp - 1] + stack[sp]
            if not math.isfinite(r):
                return 0.0, ERR_OVERFLOW, r
            stack[sp - 1] = r
        elif op == OP_SUB:
            sp -= 1
            r = stack[sp - 1] - stack[sp]
            if not math.isfinite(r):
                return 0.0, ERR_OVERFLOW, r
            stack[sp - 1] = r
        elif op == OP_MUL:
            sp -= 1
            r = stack[sp - 1] * stack[sp]
            if not math.isfinite(r):
                return 0.0, ERR_OVERFLOW, r
            stack[sp - 1] = r
        elif op == OP_DIV:
            sp -= 1
            b = stack[sp]
            if b == 0.0:
                return 0.0, ERR_DIV_ZERO, b
            r = stack[sp - 1] / b
            if not math.isfinite(r):
                return 0.0, ERR_OVERFLOW, r
            stack[sp - 1] = r
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_ABS:
            stack[sp - 1] = abs(stack[sp - 1])
        elif op == OP_SIGN:
            a = stack[sp - 1]
            # branches rather than bool arithmetic: the stack may hold numpy
            # scalars when callers pass array rows straight in
            stack[sp - 1] = 1.0 if a > 0.0 else (-1.0 if a < 0.0 else 0.0)
        elif op == OP_EXP:
            a = stack[sp - 1]
            try:
                r = math.exp(a)
            except OverflowError:
                return 0.0, ERR_OVERFLOW, a
            if not math.isfinite(r):
                return 0.0, ERR_OVERFLOW, a
            stack[sp - 1] = r
        elif op == OP_LN:
            a = stack[sp - 1]
            if a <= 0.0:
                return 0.0, ERR_LN_DOMAIN, a
            stack[sp - 1] = math.log(a)
        elif op == OP_SQRT:
            a = stack[sp - 1]
            if a < 0.0:
                return 0.0, ERR_SQRT_DOMAIN, a
            stack[sp - 1] = math.sqrt(a)
        elif op == OP_POW:
            sp -= 1
            a = stack[sp - 1]
            b = stack[sp]
            if a < 0.0 and b != math.floor(b):
                return 0.0, ERR_POW_DOMAIN, a
            if a == 0.0 and b < 0.0:
                return 0.0, ERR_DIV_ZERO, a
            try:
                r = math.pow(a, b)
            except OverflowError:
                return 0.0, ERR_OVERFLOW, a
            if not math.isfinite(r):
                return 0.0, ERR_OVERFLOW, a
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
            stack[sp - 1] = math.sin(stack[sp - 1])
        elif op == OP_COS:
            stack[sp - 1] = math.cos(stack[sp - 1])
        else:
            raise RuntimeError("unknown opcode %d" % op)
    return stack[0], ERR_NONE, 0.0


def eval_one(code, operand, stack_need, x, u):
    stack = [0.0] * stack_need
    return _run(code, operand, x, u, stack)


def eval_many(code, operand, stack_need, X, U):
    """Evaluate one program over rows of X (N,n) and U (N,m)."""
    n_rows = X.shape[0]
    out = np.empty(n_rows)
    err = np.zeros(n_rows, dtype=np.int32)
    stack = [0.0] * stack_need
    xs = X.tolist()
    us = U.tolist()
    for i in range(n_rows):
        v, e, _ = _run(code, operand, xs[i], us[i], stack)
        out[i] = v
        err[i] = e
    return out, err


def rk4_segment(code, operand, offsets, stack_need, x0, hs, u_stages):
    """Integrate x' = f(x, u) over one inter-impulse segment.

    ``code``/``operand``/``offsets`` pack the n component programs, ``hs``
    holds the step sizes and ``u_stages`` has shape (steps, 3, m) with the
    input evaluated at the start, midpoint and end of each step.  Returns
    (states after each step (steps, n), errcode, failing step index).
    """
    n = len(offsets) - 1
    steps = len(hs)
    out = np.empty((steps, n))
    stack = [0.0] * stack_need
    x = list(x0)
    k1 = [0.0] * n
    k2 = [0.0] * n
    k3 = [0.0] * n
    k4 = [0.0] * n
    xs = [0.0] * n
    ustages = u_stages.tolist()
    for s in range(steps):
        h = hs[s]
        u0, u1, u2 = ustages[s]
        for j in range(n):
            v, e, _ = _run(code[offsets[j]:offsets[j + 1]],
                           operand[offsets[j]:offsets[j + 1]], x, u0, stack)
            if e != ERR_NONE:
                return out, e, s
            k1[j] = v
        for j in range(n):
            xs[j] = x[j] + 0.5 * h * k1[j]
        for j in range(n):
            v, e, _ = _run(code[offsets[j]:offsets[j + 1]],
                           operand[offsets[j]:offsets[j + 1]], xs, u1, stack)
            if e != ERR_NONE:
                return out, e, s
            k2[j] = v
        for j in range(n):
            xs[j] = x[j] + 0.5 * h * k2[j]
        for j in range(n):
            v, e, _ = _run(code[offsets[j]:offsets[j + 1]],
                           operand[offsets[j]:offsets[j + 1]], xs, u1, stack)
            if e != ERR_NONE:
                return out, e, s
            k3[j] = v
        for j in range(n):
            xs[j] = x[j] + h * k3[j]
        for j in range(n):
            v, e, _ = _run(code[offsets[j]:offsets[j + 1]],
                           operand[offsets[j]:offsets[j + 1]], xs, u2, stack)
            if e != ERR_NONE:
                return out, e, s
            k4[j] = v
        h6 = h / 6.0
        bad = False
        for j in range(n):
            xj = x[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not math.isfinite(xj):
                bad = True
            x[j] = xj
            out[s, j] = xj
        if bad:
            return out, ERR_OVERFLOW, s
    return out, ERR_NONE, -1
