from .app import Settings, create_app
from .manager import SessionManager

__all__ = ["Settings", "create_app", "SessionManager"]
