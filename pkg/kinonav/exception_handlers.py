"""
Command level exception handlers. Each handler logs a one line message and returns the process exit code.
"""

import logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3


def usage_error_handler(exc: Exception) -> int:
    """
    Bad arguments, configuration overrides or an unknown policy name
    :param exc: the raised exception
    :return: exit code 1
    """
    logger.error("Usage error: %s", exc)
    return EXIT_USAGE


def data_error_handler(exc: Exception) -> int:
    """
    Malformed or inconsistent input files
    :param exc: the raised exception
    :return: exit code 2
    """
    logger.error("Data error: %s", exc)
    return EXIT_DATA


def identification_error_handler(exc: Exception) -> int:
    """
    A regime could not be identified, the message names the regime
    :param exc: the raised exception
    :return: exit code 2
    """
    logger.error("Identification failed for %s", exc)
    return EXIT_DATA


def model_error_handler(exc: Exception) -> int:
    """
    Invalid parameters or non finite states
    :param exc: the raised exception
    :return: exit code 2
    """
    logger.error("Invalid model input: %s", exc)
    return EXIT_DATA


def infeasible_task_handler(exc: Exception) -> int:
    """
    World generation or the episode itself cannot be carried out
    :param exc: the raised exception
    :return: exit code 3
    """
    logger.error("Infeasible task: %s", exc)
    return EXIT_INFEASIBLE
