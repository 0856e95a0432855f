"""Exception hierarchy.  Every error names the module that raised it."""


class CoarseLabError(Exception):
    pass


class PreconditionError(CoarseLabError, ValueError):
    def __init__(self, module: str, message: str):
        super().__init__(f"[{module}] {message}")
        self.module = module


class HorizonError(CoarseLabError):
    """A query reaches outside the region where ball distances are exact."""

    def __init__(self, module: str, message: str, required_radius: int | None = None):
        text = f"[{module}] untrusted region: {message}"
        if required_radius is not None:
            text += f" (needs radius >= {required_radius})"
        super().__init__(text)
        self.module = module
        self.required_radius = required_radius


class ResourceLimitError(CoarseLabError):
    def __init__(self, module: str, message: str):
        super().__init__(f"[{module}] resource limit: {message}")
        self.module = module


class SpecError(CoarseLabError, ValueError):
    """Unparseable or unsupported group spec."""
