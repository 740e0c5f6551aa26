"""
.. module:: io_nb
    :synopsis: Input-output handling, error and warning display

Handles the input/output of the code (at least most of it): the way error and
warning messages are displayed, and the two plain-text formats every artefact
of NetBurst is written in.

* **structured text**: one ``prefix.field = value`` line per field, values
  written as Python literals, read back with :func:`ast.literal_eval`. This
  is the syntax of the input parameter files, and it is reused for sidecar
  metadata, codebooks, checkpoint headers, manifests and reports.
* **column files**: comma separated values with a one line header, used for
  series, event streams and every plot-data export (``x,y`` curves, bar
  charts).

Floating point numbers are always written with 17 significant digits, so that
reading a file back gives bit-identical values.

If something is printed that does not satisfy you (number of decimals, for
instance), you only have to find the called function and change a number.
"""
import ast
import math
import os
import re
import textwrap

import numpy as np

# Ascii art for error display
START_LINE = {}
START_LINE['error'] = [r' /|\   ',
                       r'/_o_\  ',
                       r'       ']
START_LINE['warning'] = [r' /!\ ',
                         r'     ']
START_LINE['info'] = [r' /!\ ',
                      r'     ']

STANDARD_LENGTH = 80  # standard, increase if you have a big screen

FLOAT_FORMAT = '%.17g'

# A structured text line: prefix.field = literal
LINE_PATTERN = re.compile(r'^\s*([A-Za-z_]\w*)\.([A-Za-z_]\w*)\s*=\s*(.+?)\s*$')


def pretty_print(string, status, return_string=False):
    """
    Return the string formatted according to its status

    The input is a potentially long message, describing the problem.
    According to the severity of its status (so far, 'error' will exit the
    program, whereas 'warning' and 'info' will go through anyway).

    Standard length has been defined globally, as well as the ascii-art
    dictionary of arrays START_LINE.

    """
    length = STANDARD_LENGTH-len(START_LINE[status][0])
    # Remove unwanted spaces (coming from carriage returns in the input string)
    # and handle voluntary carriage returns specified with \n
    first_cleanup = [' '.join(elem.lstrip(' ').split())
                     for elem in string.split('\n')]
    splitted = []
    for elem in first_cleanup:
        splitted.extend(textwrap.wrap(elem, length))

    output = ''
    if status == 'error':
        # Add a blank line so that the error displays better
        output += '\n'

    # If the number of needed lines is bigger than the ascii-art, the last
    # line of it (empty) is used.
    for index, line in enumerate(splitted):
        start_index = min(index, len(START_LINE[status])-1)
        output += START_LINE[status][start_index]+line+'\n'

    if return_string:
        return output
    print(output, end='')


def warning_message(message, category, filename, lineno, *args, **kwargs):
    """
    Custom implementation of `showwarning` from :mod:`warnings`

    """
    pretty_print(str(message), "warning")


def progress(command_line, string):
    """Print a progress line, unless the run was asked to be silent"""
    if command_line is not None and not getattr(command_line, 'silent', False):
        pretty_print(string, "info")


class NetBurstError(Exception):
    """
    Base class defining the general presentation of error messages

    Every error knows the exit status the command line should return when it
    reaches the top level, and can be tagged with the pipeline stage and the
    entity key it happened in.

    """
    exit_code = 2

    def __init__(self, message, stage=None, key=None):
        """Reformat the name of the class for easier reading"""
        Exception.__init__(self, message)
        self.message = message
        self.stage = stage
        self.key = key
        # Extract the name, and add spaces between the capital letters
        name = self.__class__.__name__
        self.name = name[0] + re.sub(r'([A-Z])', r' \1', name[1:])

    def tag(self, stage, key=None):
        """Record where the error happened, keeping an earlier tag"""
        if self.stage is None:
            self.stage = stage
        if self.key is None:
            self.key = key
        return self

    def __str__(self):
        """Define the behaviour under the print statement"""
        message = self.message
        if self.stage is not None:
            where = "stage '%s'" % self.stage
            if self.key is not None:
                where += ", entity '%s'" % self.key
            message = '[%s] %s' % (where, message)
        return '\n\n' + self.name + ':' + pretty_print(
            message, "error", True)


class ConfigurationError(NetBurstError):
    """Missing files, wrong parameter names, unknown keys..."""
    exit_code = 1


class DataError(NetBurstError):
    """Input data failing validation (trace lines, series files, tokens)"""
    exit_code = 2


class ArgumentError(NetBurstError):
    """Argument outside of the domain of an operation"""
    exit_code = 2


class FitError(NetBurstError):
    """A codebook or a model cannot be fitted on the data provided"""
    exit_code = 2


class ForecastError(NetBurstError):
    """The context of a forecast does not contain any burst"""
    exit_code = 2


class EmbeddingError(NetBurstError):
    """The series to embed does not contain any burst"""
    exit_code = 2


class MetricError(NetBurstError):
    """Undefined metric (zero mean, constant training series...)"""
    exit_code = 3


class TrainingError(NetBurstError):
    """Non finite loss during the optimisation of a token model"""
    exit_code = 3


def format_value(value):
    """
    Write a value as a Python literal

    Floats use 17 significant digits, so that they are read back exactly;
    mappings are written with sorted keys so that files do not depend on
    insertion order.

    >>> format_value(0.1)
    '0.10000000000000001'
    >>> format_value({'b': 1, 'a': [2.0, 'x']})
    "{'a': [2.0, 'x'], 'b': 1}"

    """
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if value is None or isinstance(value, bool):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return repr(str(value))
        string = FLOAT_FORMAT % value
        if not re.search(r'[.eE]', string):
            string += '.0'
        return string
    if isinstance(value, str):
        return repr(value)
    if isinstance(value, dict):
        return '{' + ', '.join(
            '%s: %s' % (format_value(key), format_value(value[key]))
            for key in sorted(value, key=str)) + '}'
    if isinstance(value, tuple):
        inner = ', '.join(format_value(elem) for elem in value)
        return '(' + inner + (',)' if len(value) == 1 else ')')
    if isinstance(value, (list, range)):
        return '[' + ', '.join(format_value(elem) for elem in value) + ']'
    raise TypeError("cannot write a value of type %s" % type(value).__name__)


def write_structured(path, prefix, fields, header=None, mode='w'):
    """
    Write an ordered set of fields as ``prefix.field = value`` lines

    Parameters
    ----------
    path : str
        destination file
    prefix : str
        namespace of the fields, for instance `data` or `codebook`
    fields : list of (str, object) or dict
        fields to write, in order (a dict is written with sorted keys)

    Keyword Arguments
    -----------------
    header : str
        comment written first, prefixed with `#`
    mode : str
        `a` appends a new block to an existing file

    """
    if isinstance(fields, dict):
        fields = sorted(fields.items())
    with open(path, mode) as out:
        if header is not None:
            for line in header.split('\n'):
                out.write(('# ' + line).rstrip() + '\n')
        for name, value in fields:
            out.write('%s.%s = %s\n' % (prefix, name, format_value(value)))


def parse_structured(lines, prefix, source='<string>', strict=True):
    """
    Read ``prefix.field = value`` lines into a dictionary

    Lines starting with `#` and blank lines are skipped. A malformed line, a
    value which is not a Python literal, or a field written twice raise a
    :class:`ConfigurationError` naming the line. Lines of another prefix are
    rejected in strict mode, and ignored otherwise.

    >>> parse_structured(['# comment', "data.window = 100.", "data.seeds = [0, 1]"], 'data')
    {'window': 100.0, 'seeds': [0, 1]}

    """
    fields = {}
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        match = LINE_PATTERN.match(stripped)
        if match is None:
            raise ConfigurationError(
                "%s, line %d: could not understand '%s'. Lines should read "
                "'%s.field = value'" % (source, number, stripped, prefix))
        structure, name, literal = match.groups()
        if structure != prefix:
            if strict:
                raise ConfigurationError(
                    "%s, line %d: unexpected prefix '%s' (expected '%s')" % (
                        source, number, structure, prefix))
            continue
        try:
            value = ast.literal_eval(literal)
        except (ValueError, SyntaxError):
            raise ConfigurationError(
                "%s, line %d: the value of '%s' is not a literal: %s" % (
                    source, number, name, literal))
        if name in fields:
            raise ConfigurationError(
                "%s, line %d: '%s.%s' is defined twice" % (
                    source, number, prefix, name))
        fields[name] = value
    return fields


def read_structured(path, prefix, strict=True):
    """Read a structured text file, see :func:`parse_structured`"""
    if not os.path.isfile(path):
        raise ConfigurationError("The file '%s' does not exist" % path)
    with open(path, 'r') as source:
        return parse_structured(source, prefix, path, strict)


def write_columns(path, header, rows):
    """
    Write a comma separated column file with a one line header

    Floats are written with 17 significant digits, integers and strings as
    they are.

    """
    with open(path, 'w') as out:
        out.write(','.join(header) + '\n')
        for row in rows:
            out.write(','.join(_cell(elem) for elem in row) + '\n')


def _cell(value):
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if value is None:
        return ''
    return str(value)


def read_columns(path, header):
    """
    Read a column file written by :func:`write_columns`

    The header must match exactly; every cell is converted to float. Any
    malformed line raises a :class:`DataError` naming the file and the line.

    Returns
    -------
    columns : list of numpy.ndarray
        one array per column of the header

    """
    if not os.path.isfile(path):
        raise DataError("The file '%s' does not exist" % path)
    rows = []
    with open(path, 'r') as source:
        first = source.readline().strip()
        if first.split(',') != list(header):
            raise DataError(
                "%s, line 1: expected the header '%s', found '%s'" % (
                    path, ','.join(header), first))
        for number, line in enumerate(source, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(',')
            if len(cells) != len(header):
                raise DataError("%s, line %d: expected %d columns" % (
                    path, number, len(header)))
            try:
                rows.append([float(cell) for cell in cells])
            except ValueError:
                raise DataError("%s, line %d: non numeric value in '%s'" % (
                    path, number, line))
    table = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    return [table[:, index] for index in range(len(header))]


def write_curve(path, x, y):
    """Two-column `x,y` export used for CCDF, CDF and ACF curves"""
    write_columns(path, ['x', 'y'], zip(
        [float(elem) for elem in x], [float(elem) for elem in y]))


def log_parameters(config, folder, version):
    """
    Write the log.param of an output folder

    Writes a header with the NetBurst version, then the fully resolved
    configuration in parameter-file syntax, so that the file can be given
    back with `--config` to reproduce the run.

    """
    write_structured(
        os.path.join(folder, 'log.param'), 'data', config.as_fields(),
        header="-----NetBurst %s-----\n" % version)


def log_timings(folder, timings):
    """
    Write the wall-clock time of each stage to `timings.param`

    .. note::

        Apart from this file, timings only appear on the last line of the
        reports. Everything else a run writes is reproducible byte for byte.

    """
    write_structured(os.path.join(folder, 'timings.param'), 'timing',
                     [(name, float(seconds)) for name, seconds in timings])
