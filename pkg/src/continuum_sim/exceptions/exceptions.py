class InvalidScenario(Exception):
    """
    Base class for errors raised while validating a scenario document. Every
    subclass names the offending key path.
    """

    def __init__(self, key_path: str, exception_message: str) -> None:
        self.key_path = key_path
        self.message = f"{key_path}: {exception_message}"
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class MixtureNotNormalized(InvalidScenario):
    """
    Exception raised when task-mixture probabilities do not sum to one.
    """

    def __init__(self, key_path: str, total: float) -> None:
        self.total = total
        super().__init__(
            key_path,
            f"task-mixture probabilities sum to {total!r}; they must sum to 1 (tolerance 1e-9).",
        )


class NegativeParameter(InvalidScenario):
    """
    Exception raised when a parameter lies outside its admissible range (negative,
    zero where strictly positive is required, or an empty collection).
    """

    def __init__(self, key_path: str, value, requirement: str = "must be >= 0") -> None:
        self.value = value
        super().__init__(key_path, f"value {value!r} is invalid, {requirement}.")


class UnknownDeviceClass(InvalidScenario):
    """
    Exception raised when a device (or task, link, architecture) names a class that does not exist.
    """

    def __init__(self, key_path: str, value, valid_values=()) -> None:
        self.value = value
        self.valid_values = list(valid_values)
        super().__init__(
            key_path,
            f"unknown value {value!r}. Please use one of the following values: {', '.join(self.valid_values)}.",
        )


class OverlappingOutageWindows(InvalidScenario):
    """
    Exception raised when outage windows overlap or leave the simulation horizon.
    """

    def __init__(self, key_path: str, detail: str) -> None:
        super().__init__(key_path, detail)


class NonPositiveRate(Exception):
    """
    Exception raised when an arrival rate is zero or negative.
    """

    def __init__(self, rate_per_s: float) -> None:
        self.rate_per_s = rate_per_s
        self.message = f"Arrival rate must be > 0 events/s, got {rate_per_s!r}."
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class LinkUnavailable(Exception):
    """
    Exception raised when a link traversal cannot be made, after the retry policy
    has been spent. `elapsed_ms` is the simulated time consumed by backoff.
    """

    def __init__(self, tier, elapsed_ms: float = 0.0, attempts: int = 1) -> None:
        self.tier = tier
        self.elapsed_ms = elapsed_ms
        self.attempts = attempts
        self.message = f"Link tier {getattr(tier, 'value', tier)} unavailable after {attempts} attempt(s)."
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class NoRouteAvailable(Exception):
    """
    Exception raised by routing when every link a task requires is down.
    """

    def __init__(self, task_id, reason: str = "every required link is down") -> None:
        self.task_id = task_id
        self.reason = reason
        self.message = f"No route available for task {task_id}: {reason}."
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class EmptyWindow(Exception):
    """
    Exception raised when no time-critical task arrives inside an outage window.
    """

    def __init__(self, window) -> None:
        self.window = window
        self.message = f"No time-critical tasks arrived in window {window}."
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class UtilizationOutOfRange(Exception):
    """
    Exception raised when a measured utilization factor lies outside [0, 1].
    """

    def __init__(self, service_id: str, rho: float) -> None:
        self.service_id = service_id
        self.rho = rho
        self.message = f"Utilization {rho!r} of microservice '{service_id}' is outside [0, 1]."
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class InsufficientSamples(Exception):
    """
    Exception raised when a statistic needs more samples than were given.
    """

    def __init__(self, n: int, required: int = 2) -> None:
        self.n = n
        self.required = required
        self.message = f"At least {required} samples are required, got {n}."
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class DomainError(Exception):
    """
    Exception raised when a numerical routine is called outside its domain.
    """

    def __init__(self, function_name: str, detail: str) -> None:
        self.message = f"{function_name}: {detail}"
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class EmptyArchitectureSet(Exception):
    """
    Exception raised when an experiment is requested for no architectures.
    """

    def __init__(self) -> None:
        self.message = "At least one architecture must be selected (cloud, gateway, dfc or all)."
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class MissingReferenceMetric(Exception):
    """
    Exception raised when the reference file expects a metric the report does not contain.
    """

    def __init__(self, reference_id: str, metric: str) -> None:
        self.reference_id = reference_id
        self.metric = metric
        self.message = f"Reference entry '{reference_id}' expects metric '{metric}', which is missing from the report."
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class ReportWriteError(Exception):
    """
    Exception raised when a report file cannot be written.
    """

    def __init__(self, path, cause: BaseException) -> None:
        self.path = path
        self.cause = cause
        self.message = f"Could not write report file {path}: {cause}"
        super().__init__(self.message)

    def __str__(self):
        return f"{self.message}"


class QueueInstability(UserWarning):
    """
    Warning emitted when a server's long-run utilization exceeds 0.95.
    """


class DegenerateSamples(UserWarning):
    """
    Warning emitted when both samples of a t-test have zero variance.
    """
