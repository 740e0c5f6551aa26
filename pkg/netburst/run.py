"""
.. module:: run
    :synopsis: Run the code, initialising everything and calling the command

"""
import netburst.io_nb as io_nb
from netburst.initialise import initialise


def run(custom_command=''):
    """
    Main call of the function

    Initialises the configuration and the output folder, then calls the
    driver of the requested command (see :mod:`experiments`).

    Parameters
    ----------
        custom_command: str
            allows for testing the code

    Returns
    -------
    status : int
        0 on success, otherwise the exit code of the error met (1 for
        configuration errors, 2 for data errors, 3 for numerical ones)

    """
    try:
        config, command_line, version = safe_initialisation(custom_command)
        # Imported here, so that `--help` does not pay for torch
        from netburst import experiments
        experiments.COMMANDS[command_line.subparser_name](
            config, command_line, version)
    except io_nb.NetBurstError as error:
        print(str(error))
        return error.exit_code
    return 0


def safe_initialisation(custom_command=''):
    """Wrapper around the init function, naming the stage of its errors"""
    try:
        return initialise(custom_command)
    except io_nb.ConfigurationError as error:
        raise error.tag('initialisation')
