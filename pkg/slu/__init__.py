"""memslu - memory-based contextual spoken language understanding."""

__version__ = "0.1.0"
