"""Exception types shared across the workbench.

Operations that report problems as *data* (validate, check_invariants,
apply_action) return diagnostics instead of raising; the exceptions here
are for contract violations and unrecoverable inputs.
"""

from __future__ import annotations


class PchartError(Exception):
    """Base class for all workbench errors."""


class JsonSyntaxError(PchartError):
    def __init__(self, line: int, col: int, reason: str):
        super().__init__(f"JSON syntax error at line {line}, column {col}: {reason}")
        self.line = line
        self.col = col


class SchemaViolation(PchartError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"schema violation at {path}: {reason}")
        self.path = path
        self.reason = reason


class InvariantViolationError(PchartError):
    """A parsed document builds a structurally invalid chart."""

    def __init__(self, object_id, rule: str):
        super().__init__(f"invalid chart (object {object_id}): {rule}")
        self.object_id = object_id
        self.rule = rule


class UnknownStateError(PchartError):
    def __init__(self, state_id):
        super().__init__(f"unknown state id {state_id}")
        self.state_id = state_id


class ExprSyntaxError(PchartError):
    def __init__(self, position: int, expected, found: str):
        expset = ", ".join(sorted(expected))
        super().__init__(f"syntax error at position {position}: expected {expset}, found {found!r}")
        self.position = position
        self.expected = frozenset(expected)
        self.found = found


class ExprTypeError(PchartError):
    def __init__(self, node, expected: str, found: str):
        super().__init__(f"type error at {node}: expected {expected}, found {found}")
        self.node = node
        self.expected = expected
        self.found = found


class UnknownVariableError(PchartError):
    def __init__(self, name: str):
        super().__init__(f"unknown variable {name!r}")
        self.name = name


class EvalError(PchartError):
    pass


class CompileError(PchartError):
    pass


class UnsupportedTrigger(CompileError):
    def __init__(self, kind: str, trans_id):
        super().__init__(f"trigger kind {kind!r} on transition {trans_id} cannot be compiled")
        self.kind = kind
        self.trans_id = trans_id


class NonConstantProbability(CompileError):
    def __init__(self, trans_id):
        super().__init__(f"transition {trans_id} carries a non-constant probability")
        self.trans_id = trans_id


class RangeViolation(PchartError):
    def __init__(self, var: str, value: int, trans_id=None, step=None):
        where = f" (transition {trans_id})" if trans_id is not None else ""
        at = f" at step {step}" if step is not None else ""
        super().__init__(f"assignment leaves declared range: {var} = {value}{where}{at}")
        self.var = var
        self.value = value
        self.trans_id = trans_id
        self.step = step


class StateLimitExceeded(PchartError):
    def __init__(self, limit: int):
        super().__init__(f"reachable state space exceeds limit of {limit} states")
        self.limit = limit


class UnknownTargetError(PchartError):
    def __init__(self, target):
        super().__init__(f"query target {target} does not occur in the flat space")
        self.target = target


class NoConvergence(PchartError):
    def __init__(self, max_iter: int, residual: float):
        super().__init__(f"value iteration did not converge after {max_iter} iterations (residual {residual:g})")
        self.max_iter = max_iter
        self.residual = residual


class TargetNotAlmostSure(PchartError):
    """Expected-cost precondition failed: some scheduler avoids the target."""

    def __init__(self, mode: str, witness: str):
        super().__init__(f"expected-cost ({mode}) undefined: target not reached almost surely; {witness}")
        self.mode = mode
        self.witness = witness


class ProbabilisticChart(PchartError):
    def __init__(self, command_id):
        super().__init__(f"command {command_id} is probabilistic; C generation requires a deterministic chart")
        self.command_id = command_id


class InvalidGeometry(PchartError):
    pass


class DegeneratePath(PchartError):
    pass


class MissingLayout(PchartError):
    def __init__(self, object_id):
        super().__init__(f"layout result missing entry for object {object_id}")
        self.object_id = object_id
