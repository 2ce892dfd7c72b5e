"""Exception types shared across the package."""


class DataError(Exception):
    """Integrity problem in input data (missing ids, malformed files, key mismatches)."""


class ClientError(Exception):
    """Model-client failure: transport, auth, rate limits, or unscripted inputs."""


class UnparseableVerdict(ValueError):
    """Model output that cannot be read as a yes/no verdict."""

    def __init__(self, raw: str):
        super().__init__(f"unparseable verdict: {raw!r}")
        self.raw = raw
