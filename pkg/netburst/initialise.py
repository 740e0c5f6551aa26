"""
.. module:: initialise
    :synopsis: initialisation

"""
import os

import netburst.io_nb as io_nb
import netburst.parser_nb as parser_nb
from netburst.config import ExperimentConfig


def initialise(custom_command=''):
    """
    Initialisation routine

    This function recovers the input from the command line arguments, from
    :mod:`parser_nb`, reads the parameter file, applies the command line
    overrides, and prepares the output folder with its `log.param`.

    Parameters
    ----------
        custom_command: str
            allows for testing the code

    Returns
    -------
    config : ExperimentConfig
    command_line : Namespace
    version : str

    """
    command_line = parser_nb.parse(custom_command)
    version = parser_nb.read_version()
    io_nb.progress(command_line, 'Running NetBurst v%s' % version)

    if command_line.config is not None:
        config = ExperimentConfig.from_file(command_line.config)
    else:
        config = ExperimentConfig()

    # Overwrite the parameter file with the command line
    overrides = {}
    if command_line.seed is not None:
        overrides['seeds'] = [command_line.seed]
    if command_line.out is not None:
        overrides['out'] = command_line.out
    if overrides:
        config = config.replace(**overrides)

    prepare_folder(config.out)
    io_nb.log_parameters(config, config.out, version)
    return config, command_line, version


def prepare_folder(folder):
    """Create the output folder, refusing to write into a plain file"""
    if os.path.exists(folder) and not os.path.isdir(folder):
        raise io_nb.ConfigurationError(
            "The output folder '%s' is an existing file" % folder)
    if not os.path.isdir(folder):
        os.makedirs(folder)
