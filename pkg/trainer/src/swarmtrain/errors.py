class TrainerError(Exception):
    """Configuration, dimension, or usage problem in the training package."""
