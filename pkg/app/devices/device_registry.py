from typing import Dict, List

from loguru import logger

from app.utils.exceptions import InvalidParametersError


class DeviceRegistry:
    """
    Registry mapping device kinds to their implementation classes.
    Device classes register themselves when their module is imported.
    """
    # Map of device kind to device class
    _kinds: Dict[str, type] = {}

    @classmethod
    def register_kind(cls, kind: str, device_class: type):
        """
        Register a device class for a kind.

        Args:
            kind (str): Device kind (from DeviceKind constants)
            device_class (type): BaseDevice subclass implementing it
        """
        if kind in cls._kinds and cls._kinds[kind] is not device_class:
            logger.warning(f"Device kind {kind} re-registered by {device_class.__name__}")
        cls._kinds[kind] = device_class
        logger.debug(f"Device class {device_class.__name__} registered as {kind}")

    @classmethod
    def get_class(cls, kind: str) -> type:
        """
        Get the device class for a kind.

        Args:
            kind (str): Device kind

        Returns:
            type: The registered class
        """
        if kind not in cls._kinds:
            raise InvalidParametersError(f"No device registered for kind {kind}")
        return cls._kinds[kind]

    @classmethod
    def create(cls, spec, horizon: int, **kwargs):
        """
        Build a device from its parameter record.

        Args:
            spec: A DeviceSpec parameter record
            horizon (int): Number of time periods T
            **kwargs: Tolerance overrides passed to the device

        Returns:
            BaseDevice: The device
        """
        return cls.get_class(spec.kind)(spec, horizon, **kwargs)

    @classmethod
    def kinds(cls) -> List[str]:
        return sorted(cls._kinds)
