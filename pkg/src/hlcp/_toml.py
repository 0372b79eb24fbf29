try:
    from tomllib import loads
except ModuleNotFoundError:  # Python < 3.11
    from tomli import loads

__all__ = ["loads"]
