"""Generator for the locks program family.

``N`` lock flags are acquired and released in a nondeterministic loop, each
guarded by an input flag fixed before the loop.  The programs are safe.  An
explicit-value analysis has to enumerate every combination of the input
flags, while a BDD analysis stores them in one symbolic state per location.

Two spellings are available.  ``bool`` checks a released lock with
``lk == 0`` so that every variable is used as a boolean.  ``svcomp`` uses
``lk != 1`` as the SV-COMP originals do, which makes the lock flags IntEq.
"""

from __future__ import annotations

STYLES = ("bool", "svcomp")


def generate_locks(n: int, style: str = "bool") -> str:
    if n < 1:
        raise ValueError("the locks family needs at least one lock")
    if style not in STYLES:
        raise ValueError(f"unknown locks style {style!r}")
    check = "lk{i} == 0" if style == "bool" else "lk{i} != 1"
    out = [f"// locks family, {n} locks ({style} style)", "int main() {"]
    for i in range(1, n + 1):
        out.append(f"  int p{i} = __VERIFIER_nondet_int();")
        out.append(f"  int lk{i};")
    out.append("  int cond;")
    out.append("  while (1) {")
    out.append("    cond = __VERIFIER_nondet_int();")
    out.append("    if (cond == 0) {")
    out.append("      goto out;")
    out.append("    }")
    for i in range(1, n + 1):
        out.append(f"    lk{i} = 0;")
    for i in range(1, n + 1):
        out.append(f"    if (p{i} != 0) {{")
        out.append(f"      lk{i} = 1;")
        out.append("    }")
    for i in range(1, n + 1):
        out.append(f"    if (p{i} != 0) {{")
        out.append(f"      if ({check.format(i=i)}) {{")
        out.append("        goto ERROR;")
        out.append("      }")
        out.append(f"      lk{i} = 0;")
        out.append("    }")
    out.append("  }")
    out.append("out:")
    out.append("  return 0;")
    out.append("ERROR:")
    out.append("  __VERIFIER_error();")
    out.append("  return 0;")
    out.append("}")
    return "\n".join(out) + "\n"
