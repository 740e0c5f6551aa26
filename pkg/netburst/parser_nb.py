"""
.. module:: parser_nb
    :synopsis: Definition of the command line options

Defines the command line options and their help messages in
:func:`create_parser` and reads the input command line in :func:`parse`.

Help strings are harvested from the docstring of :func:`create_parser`: keys
are surrounded by `<**>`, and descriptions by three `<++>` markers, the first
part being the short help (`-h`), both parts together the long one
(`--help`).
"""
import argparse as ap
import io
import os
import re

import netburst.io_nb as io_nb

COMMANDS = ('ingest', 'synth', 'eventize', 'fit-codebook', 'train', 'forecast',
            'evaluate', 'ablate', 'transfer', 'embed', 'stats')


class NbArgumentParser(ap.ArgumentParser):
    """Argument parser raising a ConfigurationError instead of exiting"""

    def error(self, message):
        raise io_nb.ConfigurationError(message)


def positive_int(string):
    """Check that the argument is a strictly positive integer"""
    try:
        value = int(string)
        if value <= 0:
            raise ValueError
        return value
    except ValueError:
        raise ap.ArgumentTypeError(
            "expected a positive integer, not '%s'" % string)


def seed_int(string):
    """An unsigned 64 bit integer"""
    try:
        value = int(string)
        if not 0 <= value < 2**64:
            raise ValueError
        return value
    except ValueError:
        raise ap.ArgumentTypeError(
            "a seed is an integer in [0, 2**64), not '%s'" % string)


def existing_file(fname):
    """Check that the file exists"""
    if os.path.isfile(fname):
        return fname
    raise ap.ArgumentTypeError("The file '{}' does not exist".format(fname))


def parse_docstring(docstring, key_symbol="<**>", description_symbol="<++>"):
    """
    Extract from the docstring the keys and descriptions, as a dict

    Raises a ValueError if keys and descriptions are not paired.
    """
    docstring = re.sub(r"\s+", " ", docstring)
    key_symbol = re.escape(key_symbol)
    description_symbol = re.escape(description_symbol)

    re_key = re.compile(r'{0}-{{0,2}}(.+?){0}'.format(key_symbol))
    re_desc = re.compile(r'({0}.+?{0}.+?{0})'.format(description_symbol))

    keys = re_key.findall(docstring)
    descriptions = re_desc.findall(docstring)
    if len(keys) != len(descriptions):
        raise ValueError(
            "The option keys and their descriptions have different lengths "
            "(%d and %d)" % (len(keys), len(descriptions)))
    return dict(zip(keys, descriptions))


def custom_help(split_string="<++>"):
    """
    Create a help action printing the short (`-h`) or long (`--help`) help

    *split_string* must appear in groups of three in the help strings.
    """
    class CustomHelp(ap._HelpAction):
        def __call__(self, parser, namespace, values, option_string=None):
            output = io.StringIO()
            parser.print_help(file=output)
            help_str = output.getvalue()

            esplit_string = re.escape(split_string)
            re_desc = re.compile(r'{0}(.+?){0}(.+?){0}'.format(esplit_string),
                                 flags=re.DOTALL)
            to_sub = r'\1' if option_string == '-h' else r'\1\2'
            print(re_desc.sub(to_sub, help_str))
            parser.exit()

    return CustomHelp


def add_subparser(sp, name, **kwargs):
    """Add the subparser `name`, with the short/long help option"""
    kwargs["add_help"] = False
    kwargs['formatter_class'] = ap.ArgumentDefaultsHelpFormatter
    sparser = sp.add_parser(name, **kwargs)
    sparser.add_argument("-h", "--help", action=custom_help(),
                         help="print the short or long help")
    return sparser


def get_dict_from_docstring(key_symbol="<**>", description_symbol="<++>"):
    """
    Decorator storing the help strings of a docstring as `func.helpdict`

    The markers are removed from the docstring.
    """
    def wrapper(func):
        docstring = func.__doc__
        func.helpdict = parse_docstring(
            docstring, key_symbol=key_symbol,
            description_symbol=description_symbol)
        docstring = docstring.replace(key_symbol, '')
        func.__doc__ = docstring.replace(description_symbol, '')
        return func
    return wrapper


def read_version():
    """Content of the VERSION file at the root of the distribution"""
    root = os.path.sep.join(os.path.abspath(__file__).split(os.path.sep)[:-2])
    with open(os.path.join(root, 'VERSION'), 'r') as version_file:
        return version_file.readline().strip()


def initialise_parser(**kwargs):
    """Create the main parser, with the `--version` option"""
    kwargs['formatter_class'] = ap.ArgumentDefaultsHelpFormatter
    kwargs['add_help'] = False
    parser = NbArgumentParser(**kwargs)
    parser.add_argument('--version', action='version', version=read_version())
    parser.add_argument("-h", "--help", action=custom_help(),
                        help="print the short or long help")
    return parser


@get_dict_from_docstring()
def create_parser():
    """
    Definition of the parser command line options

    Global options come first, then one of the subcommands, for instance
    :code:`netburst --config input/evaluate.param --out runs/evaluate
    evaluate`. Each subcommand has its own help: :code:`netburst forecast
    -h`.

    Options
    -------

    **global**

        <**>--config<**> : str
            <++>input parameter file<++> (*OPT*). Every field has a default,
            a parameter file only needs the ones to change. A `log.param`
            written by a previous run is a valid parameter file.<++>
        <**>--seed<**> : int
            <++>single seed overriding data.seeds<++> (*OPT*). Seeds drive the
            initialisation and the batches of the token models, and the
            sampling of forecasts.<++>
        <**>--jobs<**> : int
            <++>number of worker threads<++> for the per-entity stages
            (*OPT*). Results do not depend on it; use 1 to debug.<++>
        <**>--out<**> : str
            <++>output folder<++> (*OPT*), overriding data.out. It is created
            if needed, and receives the log.param of the run.<++>
        <**>--silent<**> : None
            <++>no progress display<++>. Warnings are still shown.<++>

    **forecast**

        <**>--model<**> : str
            <++>folder of a trained model<++> (*OPT*), as written by the
            `train` command. Without it, a model is trained first.<++>

    """
    helpdict = create_parser.helpdict
    parser = initialise_parser(
        description='NetBurst, event-centric forecasting of bursty telemetry',
        epilog="See the documentation of each subcommand with "
        "'netburst <command> -h'")

    parser.add_argument('--config', help=helpdict['config'], type=existing_file,
                        dest='config', default=None)
    parser.add_argument('--seed', help=helpdict['seed'], type=seed_int,
                        default=None)
    parser.add_argument('--jobs', help=helpdict['jobs'], type=positive_int,
                        default=1)
    parser.add_argument('--out', help=helpdict['out'], type=str, default=None)
    parser.add_argument('--silent', help=helpdict['silent'],
                        action='store_true')

    subparser = parser.add_subparsers(dest='subparser_name')
    descriptions = {
        'ingest': 'aggregate a trace file into windowed series',
        'synth': 'generate a synthetic corpus and its manifest',
        'eventize': 'write the burst streams of every series',
        'fit-codebook': 'fit the gap, intensity and raw codebooks',
        'train': 'fit codebooks and token models, and save them',
        'forecast': 'forecast the test split of every series',
        'evaluate': 'end-to-end pipeline with metrics',
        'ablate': 'binning ablation and oracle study',
        'transfer': 'cross-granularity threshold sweep',
        'embed': 'clustering of series embeddings',
        'stats': 'burstiness statistics of the corpora',
    }
    for name in COMMANDS:
        sparser = add_subparser(subparser, name, help=descriptions[name])
        if name == 'forecast':
            sparser.add_argument('--model', help=helpdict['model'], type=str,
                                 default=None)
    return parser


def parse(custom_command=''):
    """
    Read the command line

    Keyword Arguments
    -----------------
    custom_command : str
        For testing purposes, instead of reading the command line argument,
        read instead the given string, e.g. '--out toto/ stats'

    """
    parser = create_parser()
    if not custom_command:
        args = parser.parse_args()
    else:
        args = parser.parse_args(custom_command.split())
    if args.subparser_name is None:
        raise io_nb.ConfigurationError(
            "You must give a command, one of %s" % ', '.join(COMMANDS))
    return args
