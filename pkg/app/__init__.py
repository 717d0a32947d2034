# jetforge: exact exterior calculus and contact flow laboratory
__version__ = "1.0.0"
