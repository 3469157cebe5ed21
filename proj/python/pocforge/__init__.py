from ._pocforge import (
    EngineError,
    default_entry_command,
    default_success_markers,
    detect_language,
    extract_fenced_block,
    payload_hint,
    reproduce,
    request_digest,
    route,
    verify_static,
)

__all__ = [
    "EngineError",
    "default_entry_command",
    "default_success_markers",
    "detect_language",
    "extract_fenced_block",
    "payload_hint",
    "reproduce",
    "request_digest",
    "route",
    "verify_static",
]
