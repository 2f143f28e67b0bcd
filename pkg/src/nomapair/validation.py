"""Input checks shared by the estimator-style solver layer."""

from __future__ import annotations

from .netsim import NetworkConfig, NetworkInstance

__all__ = ["check_instance", "check_instances"]


def check_instance(instance) -> NetworkInstance:
    """Require a structurally valid NetworkInstance; return it unchanged."""
    if not isinstance(instance, NetworkInstance):
        raise TypeError(
            f"expected a NetworkInstance, got {type(instance).__name__}"
        )
    instance.validate()
    return instance


def check_instances(X, expected_config: NetworkConfig | None = None) -> list[NetworkInstance]:
    """Validate a nonempty instance collection sharing one network config.

    Returns the instances as a list. When ``expected_config`` is given, every
    instance must match it exactly (the trained-policy case, where weights
    are only meaningful for the network they were trained on).
    """
    instances = list(X)
    if not instances:
        raise ValueError("expected at least one network instance")
    for s in instances:
        check_instance(s)
    reference = expected_config if expected_config is not None else instances[0].config
    for s in instances:
        if s.config != reference:
            raise ValueError(
                "instances do not share one network config"
                if expected_config is None
                else "instance config does not match the config this solver was fitted for"
            )
    return instances
