"""Exception hierarchy for the engine.

Failure of a goal is never an exception; these are raised for conditions that
indicate a broken program or query.
"""


class TabkitError(Exception):
    pass


class ProgramSyntaxError(TabkitError):
    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}" if line is not None else "end of input"
        if line is not None and col is not None:
            where += f", column {col}"
        super().__init__(f"syntax error at {where}: {message}")


class ProgramError(TabkitError):
    """Malformed directive or clause that parses but cannot be loaded."""


class ExistenceError(TabkitError):
    def __init__(self, name, arity):
        self.name = name
        self.arity = arity
        super().__init__(f"unknown procedure {name}/{arity}")


class InstantiationError(TabkitError):
    pass


class PrologTypeError(TabkitError):
    def __init__(self, expected, culprit):
        self.expected = expected
        self.culprit = culprit
        super().__init__(f"type error: expected {expected}, got {culprit}")


class EvaluationError(TabkitError):
    pass


class UnhandledShift(TabkitError):
    """A shift was executed with no enclosing reset for its prompt."""

    def __init__(self, prompt, signal):
        self.prompt = prompt
        self.signal = signal
        super().__init__(f"no enclosing reset for prompt {prompt!r} (signal {signal})")


class StepBudgetExceeded(TabkitError):
    def __init__(self, budget):
        self.budget = budget
        super().__init__(f"step budget of {budget} exhausted")


class ResumeArityError(TabkitError):
    pass
