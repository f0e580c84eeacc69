"""Source-to-source incrementalization of set expressions, recursive
functions and Datalog rules, with a cost-instrumented reference interpreter."""

__version__ = "0.1.0"
