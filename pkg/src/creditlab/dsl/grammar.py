"""Human-readable language reference, embedded into coder prompts."""

GRAMMAR_REFERENCE = """\
LANGUAGE REFERENCE

A program is exactly two definitions (comments start with '#'):

    weights: <expression evaluating to a vector with one entry per agent>
    bias: <expression evaluating to a scalar>

The only variable is the global state vector `s`:
    s[i]      component i (scalar); indices are literal integers
    s[i:j]    components i..j-1 (vector of length j-i)

Values are scalars or fixed-length vectors. Arithmetic (+, -, *, /) and
comparisons (<, <=, >, >=, ==) work elementwise; a scalar broadcasts against
a vector. Comparisons yield 0.0/1.0 and do not chain. Precedence: unary
minus, then * /, then + -, then comparisons; parentheses group.

Builtins:
    [a, b, ...]        vector literal (scalar elements)
    abs(x) sqrt(x) exp(x) log(x) relu(x)   elementwise
    softmax(v)         vector -> vector, positive, sums to 1
    sum(v) mean(v) minv(v) maxv(v)         vector -> scalar
    select(c, a, b)    elementwise: a where c is nonzero, else b
    clamp(x, lo, hi)   elementwise, scalar bounds, lo <= hi

Hard runtime rules (violations abort the candidate):
    - division by a value with magnitude below 1e-9 is an error; do not
      "fix" a risky division by adding a small constant, restructure it
      (e.g. select() on a guard condition, or 1/(1+x) forms)
    - log needs argument > 0; sqrt needs argument >= 0
    - every intermediate value must be finite

There are no loops, no user-defined functions, and no trainable parameters.
"""
