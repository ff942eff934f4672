"""Unspilling: replace stack-slot traffic with fresh registers.

The input must be in spill form with respect to a designated stack pointer
register: the stack pointer is never written, and every load and store
address is syntactically ``sp + <integer literal>``.  Each distinct offset
gets one fresh register; stores to the slot become register moves into it,
loads become register moves out of it.  The pass removes all memory
accesses, and with them their address observations.

Fresh registers are named ``__spill_<offset>`` (``m`` marks a negative
offset).  The parsers reserve the double-underscore prefix, so fresh names
cannot collide with user registers in parsed programs.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..lang import Const, Expr, Op, Var, format_expr
from ..structured import (
    Assign,
    Cmd,
    If,
    Load,
    NIL,
    Nil,
    Seq,
    Store,
    While,
    cmd_vars,
    seq,
)
from .substitute import PassError


@dataclass(frozen=True)
class SpillSlot:
    offset: int
    var: str


def slot_var(offset: int) -> str:
    return f"__spill_{offset}" if offset >= 0 else f"__spill_m{-offset}"


def spill_offset(addr: Expr, sp: str):
    """The literal offset when ``addr`` is exactly ``sp + k``, else None."""
    if (
        isinstance(addr, Op)
        and addr.kind == "+"
        and isinstance(addr.args[0], Var)
        and addr.args[0].name == sp
        and isinstance(addr.args[1], Const)
        and isinstance(addr.args[1].value, int)
        and not isinstance(addr.args[1].value, bool)
    ):
        return addr.args[1].value
    return None


def _writes(c: Cmd, name: str) -> bool:
    if isinstance(c, (Assign, Load)):
        return c.var == name
    if isinstance(c, Seq):
        return _writes(c.head, name) or _writes(c.tail, name)
    if isinstance(c, If):
        return _writes(c.then, name) or _writes(c.orelse, name)
    if isinstance(c, While):
        return _writes(c.body, name)
    return False


def check_spill_form(c: Cmd, sp: str):
    """Raise PassError unless the program is in spill form for ``sp``."""
    if _writes(c, sp):
        raise PassError(f"stack pointer {sp!r} must never be written")
    for name in cmd_vars(c):
        if name.startswith("__spill_"):
            raise PassError(f"register {name!r} collides with fresh slot names")
    _check_addresses(c, sp)


def _check_addresses(c: Cmd, sp: str):
    if isinstance(c, (Load, Store)):
        if spill_offset(c.addr, sp) is None:
            raise PassError(
                f"memory access is not a {sp}+constant slot: "
                f"[{format_expr(c.addr)}]"
            )
    elif isinstance(c, Seq):
        _check_addresses(c.head, sp)
        _check_addresses(c.tail, sp)
    elif isinstance(c, If):
        _check_addresses(c.then, sp)
        _check_addresses(c.orelse, sp)
    elif isinstance(c, While):
        _check_addresses(c.body, sp)


def _rewrite(c: Cmd, sp: str, offsets: set) -> Cmd:
    if isinstance(c, Nil):
        return NIL
    if isinstance(c, Seq):
        return seq(_rewrite(c.head, sp, offsets), _rewrite(c.tail, sp, offsets))
    if isinstance(c, Store):
        n = spill_offset(c.addr, sp)
        offsets.add(n)
        return Assign(slot_var(n), Var(c.var))
    if isinstance(c, Load):
        n = spill_offset(c.addr, sp)
        offsets.add(n)
        return Assign(c.var, Var(slot_var(n)))
    if isinstance(c, If):
        return If(c.cond, _rewrite(c.then, sp, offsets),
                  _rewrite(c.orelse, sp, offsets))
    if isinstance(c, While):
        return While(c.cond, _rewrite(c.body, sp, offsets))
    return c


def rewrite_spills(c: Cmd, sp: str = "sp") -> Cmd:
    """Rewrite without re-validating; for code already known to be in form."""
    return _rewrite(c, sp, set())


def unspill(c: Cmd, sp: str = "sp") -> "tuple[Cmd, tuple[SpillSlot, ...]]":
    """Rewrite a spill-form program; returns it with the slot table."""
    check_spill_form(c, sp)
    offsets: set = set()
    out = _rewrite(c, sp, offsets)
    slots = tuple(SpillSlot(n, slot_var(n)) for n in sorted(offsets))
    return out, slots
