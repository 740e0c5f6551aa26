"""
.. module:: token_model
    :synopsis: Causal next-token model over codebook tokens

A small decoder-only attention stack: learned token and position embeddings,
pre-norm residual blocks (causal self-attention, then a 4x feed-forward
layer), a final layer norm and a linear read-out over the vocabulary. It is
trained with next-token cross-entropy under teacher forcing, and used twice
by the forecaster: once on gap tokens, once on intensity tokens.

The vocabulary has one extra, reserved token (index `vocab`) used to
left-pad sequences shorter than the training window. Padding never enters
the loss, is never attended to, and positions are counted from the first real
token, so that a padded window predicts exactly what the unpadded one would.

Parameters and activations are 64-bit by default (`precision='float64'`);
this makes gradient checks meaningful and runs reproducible bit for bit. The
flat parameter layout is the order of :meth:`torch.nn.Module.named_parameters`,
see :meth:`TokenModel.layout`.

.. note::

    Full-scale settings (12 layers, hidden 512, 4096 bins, context 512) are
    reachable through :class:`ModelConfig`, the defaults are desk-scale.
"""
import copy
import itertools
import math
import warnings

import numpy as np
import torch
import torch.nn as nn
from torch.nn import functional as F

import netburst.io_nb as io_nb

CHECKPOINT_VERSION = 1
END_HEADER = b'end_header\n'
IGNORE = -100

DTYPES = {'float64': torch.float64, 'float32': torch.float32}


class ModelConfig(object):
    """
    Hyper-parameters of one token model

    All fields can be overridden by keyword; an unknown keyword is a
    :class:`io_nb.ConfigurationError`.

    """
    DEFAULTS = (
        ('vocab', 256),
        ('context', 512),
        ('layers', 2),
        ('hidden', 64),
        ('heads', 4),
        ('learning_rate', 1e-4),
        ('batch', 32),
        ('patience', 10),
        ('max_steps', 2000),
        ('eval_every', 50),
        ('seed', 0),
        ('precision', 'float64'),
        ('tied', False),
    )

    def __init__(self, **kwargs):
        fields = dict(self.DEFAULTS)
        unknown = sorted(set(kwargs) - set(fields))
        if unknown:
            raise io_nb.ConfigurationError(
                "unknown model setting(s) %s, known ones are %s" % (
                    ', '.join(unknown), ', '.join(name for name, _ in self.DEFAULTS)))
        fields.update(kwargs)
        for name, value in fields.items():
            setattr(self, name, value)
        for name in ('vocab', 'context', 'layers', 'hidden', 'heads', 'batch',
                     'patience', 'max_steps', 'eval_every'):
            if int(getattr(self, name)) != getattr(self, name) or \
                    getattr(self, name) <= 0:
                raise io_nb.ConfigurationError(
                    "model setting '%s' must be a positive integer, not %r" % (
                        name, getattr(self, name)))
            setattr(self, name, int(getattr(self, name)))
        if self.hidden % self.heads:
            raise io_nb.ConfigurationError(
                "hidden (%d) must be divisible by heads (%d)" % (
                    self.hidden, self.heads))
        if self.learning_rate <= 0:
            raise io_nb.ConfigurationError("the learning rate must be positive")
        if self.precision not in DTYPES:
            raise io_nb.ConfigurationError(
                "precision should be one of %s" % ', '.join(DTYPES))
        self.seed = int(self.seed)
        self.learning_rate = float(self.learning_rate)
        self.tied = bool(self.tied)

    def replace(self, **changes):
        fields = self.as_dict()
        fields.update(changes)
        return ModelConfig(**fields)

    def as_dict(self):
        return dict((name, getattr(self, name)) for name, _ in self.DEFAULTS)

    def __eq__(self, other):
        return isinstance(other, ModelConfig) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return 'ModelConfig(%s)' % ', '.join(
            '%s=%r' % (name, getattr(self, name)) for name, _ in self.DEFAULTS)

    @property
    def dtype(self):
        return DTYPES[self.precision]


class CausalSelfAttention(nn.Module):
    """Multi-head attention where position i only sees positions <= i"""

    def __init__(self, hidden, heads):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(hidden, 3*hidden)
        self.proj = nn.Linear(hidden, hidden)

    def forward(self, x, mask):
        batch, length, hidden = x.shape
        size = hidden//self.heads
        q, k, v = self.qkv(x).split(hidden, dim=2)
        q, k, v = [elem.view(batch, length, self.heads, size).transpose(1, 2)
                   for elem in (q, k, v)]
        scores = (q @ k.transpose(-2, -1))/math.sqrt(size)
        scores = scores.masked_fill(~mask, float('-inf'))
        y = F.softmax(scores, dim=-1) @ v
        return self.proj(y.transpose(1, 2).contiguous().view(
            batch, length, hidden))


class Block(nn.Module):
    """Pre-norm residual block"""

    def __init__(self, hidden, heads):
        super().__init__()
        self.ln_attention = nn.LayerNorm(hidden)
        self.attention = CausalSelfAttention(hidden, heads)
        self.ln_mlp = nn.LayerNorm(hidden)
        self.mlp = nn.Sequential(
            nn.Linear(hidden, 4*hidden), nn.GELU(), nn.Linear(4*hidden, hidden))

    def forward(self, x, mask):
        x = x + self.attention(self.ln_attention(x), mask)
        return x + self.mlp(self.ln_mlp(x))


class Network(nn.Module):
    """The attention stack itself, see the module documentation"""

    def __init__(self, config):
        super().__init__()
        self.pad = config.vocab
        self.token_embedding = nn.Embedding(config.vocab + 1, config.hidden)
        self.position_embedding = nn.Embedding(config.context, config.hidden)
        self.blocks = nn.ModuleList(
            [Block(config.hidden, config.heads) for _ in range(config.layers)])
        self.final_norm = nn.LayerNorm(config.hidden)
        if config.tied:
            self.head = None
            self.head_bias = nn.Parameter(torch.zeros(config.vocab))
        else:
            self.head = nn.Linear(config.hidden, config.vocab)
        self.apply(self._init_weights)

    @staticmethod
    def _init_weights(module):
        if isinstance(module, (nn.Linear, nn.Embedding)):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
        if isinstance(module, nn.Linear) and module.bias is not None:
            nn.init.zeros_(module.bias)

    def hidden_states(self, tokens):
        """Final-layer (normalised) hidden states, shape (batch, length, hidden)"""
        real = tokens != self.pad
        positions = (torch.cumsum(real.long(), dim=1) - 1).clamp(min=0)
        length = tokens.shape[1]
        causal = torch.ones(length, length, dtype=torch.bool).tril()
        # padding is never a key, except for itself so that no row is empty
        mask = causal & (real[:, None, :] | torch.eye(length, dtype=torch.bool))
        mask = mask[:, None, :, :]
        x = self.token_embedding(tokens) + self.position_embedding(positions)
        for block in self.blocks:
            x = block(x, mask)
        return self.final_norm(x)

    def forward(self, tokens):
        states = self.hidden_states(tokens)
        if self.head is None:
            return F.linear(states, self.token_embedding.weight[:self.pad],
                            self.head_bias)
        return self.head(states)


def build_network(config):
    """Freshly initialised network, deterministic given `config.seed`"""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        network = Network(config)
    return network.to(config.dtype)


class TokenModel(object):
    """
    Configuration and parameters of one next-token predictor

    Attributes
    ----------
    config : ModelConfig
    network : Network
    trained : bool

    Contexts are truncated to their most recent `config.context` tokens.

    """

    def __init__(self, config, network=None, trained=False):
        self.config = config
        self.network = network if network is not None else build_network(config)
        self.network.eval()
        self.trained = trained

    @property
    def params(self):
        """Flat float64 copy of the parameters, in :meth:`layout` order"""
        return nn.utils.parameters_to_vector(
            self.network.parameters()).detach().to(torch.float64).numpy()

    def layout(self):
        """(name, shape) of every parameter tensor, in flat order"""
        return [(name, tuple(tensor.shape))
                for name, tensor in self.network.named_parameters()]

    def parameter_count(self):
        return sum(tensor.numel() for tensor in self.network.parameters())

    def __repr__(self):
        return 'TokenModel(vocab=%d, hidden=%d, layers=%d, trained=%s)' % (
            self.config.vocab, self.config.hidden, self.config.layers,
            self.trained)


class TrainReport(object):
    """Outcome of :func:`train`"""

    def __init__(self, steps, final_train_loss, best_val_loss, stopped_early,
                 loss_curve):
        self.steps = steps
        self.final_train_loss = final_train_loss
        self.best_val_loss = best_val_loss
        self.stopped_early = stopped_early
        self.loss_curve = loss_curve

    def as_fields(self):
        return [('steps', self.steps),
                ('final_train_loss', self.final_train_loss),
                ('best_val_loss', self.best_val_loss),
                ('stopped_early', self.stopped_early),
                ('loss_curve', [list(elem) for elem in self.loss_curve])]


class DecodeMode(object):
    """
    How tokens are picked during generation

    `greedy` takes the most likely token (lowest index on ties), `sample`
    draws from the distribution of the logits divided by `temperature`, and
    `median` takes the first token at which the cumulative probability
    reaches one half. Codebook tokens are ordered by value, so the latter is
    the median bin of the predicted distribution.
    """
    KINDS = ('greedy', 'sample', 'median')

    def __init__(self, kind='sample', temperature=1., seed=0):
        if kind not in self.KINDS:
            raise io_nb.ConfigurationError(
                "decode mode should be one of %s, not '%s'" % (
                    ', '.join(self.KINDS), kind))
        if kind == 'sample' and not temperature > 0:
            raise io_nb.ArgumentError("the temperature must be positive")
        self.kind = kind
        self.temperature = float(temperature)
        self.seed = int(seed)

    @classmethod
    def greedy(cls):
        return cls('greedy')

    @classmethod
    def sample(cls, temperature=1., seed=0):
        return cls('sample', temperature, seed)

    @classmethod
    def median(cls):
        return cls('median')

    def reseed(self, seed):
        return DecodeMode(self.kind, self.temperature, seed)

    def __repr__(self):
        if self.kind != 'sample':
            return 'DecodeMode.%s()' % self.kind
        return 'DecodeMode.sample(temperature=%g, seed=%d)' % (
            self.temperature, self.seed)


def _check_tokens(seqs, vocab, what):
    checked = []
    for index, seq in enumerate(seqs):
        seq = np.asarray(seq, dtype=np.int64).reshape(-1)
        if len(seq) and (seq.min() < 0 or seq.max() >= vocab):
            raise io_nb.DataError(
                "%s sequence %d holds tokens outside of [0, %d)" % (
                    what, index, vocab))
        checked.append(seq)
    return checked


class _Windows(object):
    """
    Every training window of `length` tokens of a list of sequences

    A sequence of n >= length tokens gives n-length+1 windows; a shorter one
    gives a single, left-padded window.
    """

    def __init__(self, seqs, length, pad):
        self.seqs = [seq for seq in seqs if len(seq) >= 2]
        self.length = length
        self.pad = pad
        counts = [max(1, len(seq) - length + 1) for seq in self.seqs]
        self.offsets = np.cumsum([0] + counts)

    def __len__(self):
        return int(self.offsets[-1])

    def window(self, index):
        which = int(np.searchsorted(self.offsets, index, side='right')) - 1
        seq = self.seqs[which]
        begin = index - self.offsets[which]
        piece = seq[begin:begin+self.length]
        return np.concatenate(
            [np.full(self.length - len(piece), self.pad, dtype=np.int64), piece])

    def sample(self, rng, batch):
        indices = rng.integers(0, len(self), size=batch)
        return np.stack([self.window(index) for index in indices])


def _evaluation_windows(seqs, length, pad):
    """Non-overlapping windows covering every target of every sequence once"""
    stride = length - 1
    windows = []
    for seq in seqs:
        if len(seq) < 2:
            continue
        for begin in range(0, len(seq) - 1, stride):
            piece = seq[begin:begin+length]
            windows.append(np.concatenate(
                [np.full(length - len(piece), pad, dtype=np.int64), piece]))
    return windows


def _window_loss(network, windows, reduction='mean'):
    tokens = torch.as_tensor(np.asarray(windows), dtype=torch.long)
    inputs, targets = tokens[:, :-1], tokens[:, 1:].clone()
    targets[(inputs == network.pad) | (targets == network.pad)] = IGNORE
    logits = network(inputs)
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]),
                           targets.reshape(-1), ignore_index=IGNORE,
                           reduction=reduction), int((targets != IGNORE).sum())


def _evaluate(network, windows, batch):
    """Mean cross-entropy per target token (nats) over a fixed set of windows"""
    total, count = 0., 0
    with torch.no_grad():
        for begin in range(0, len(windows), batch):
            loss, number = _window_loss(
                network, windows[begin:begin+batch], reduction='sum')
            total += float(loss)
            count += number
    return total/count


def train(config, train_seqs, val_seqs=(), command_line=None):
    """
    Fit a token model with Adam and early stopping

    Training windows of `min(context, longest sequence - 1) + 1` tokens are
    drawn uniformly among all windows of the training sequences. Every
    `eval_every` steps (and at the last step) the mean validation loss is
    computed over the whole validation set; training stops after `patience`
    evaluations without improvement, and the best evaluated parameters are
    returned.

    Parameters
    ----------
    config : ModelConfig
    train_seqs : list of token sequences
    val_seqs : list of token sequences
        when no validation sequence has two tokens, the training sequences
        are used for validation, with a warning

    Returns
    -------
    model : TokenModel
    report : TrainReport

    """
    train_seqs = _check_tokens(train_seqs, config.vocab, 'training')
    val_seqs = _check_tokens(val_seqs, config.vocab, 'validation')
    if not any(len(seq) >= 2 for seq in train_seqs):
        raise io_nb.DataError(
            "at least one training sequence of two tokens or more is needed")
    if not any(len(seq) >= 2 for seq in val_seqs):
        warnings.warn(
            "No validation sequence has two tokens or more: early stopping "
            "will monitor the training sequences instead.")
        val_seqs = train_seqs

    longest = max(len(seq) for seq in train_seqs)
    length = min(config.context, longest - 1) + 1
    windows = _Windows(train_seqs, length, config.vocab)
    evaluation = _evaluation_windows(val_seqs, length, config.vocab)

    network = build_network(config)
    network.train()
    optimizer = torch.optim.Adam(network.parameters(), lr=config.learning_rate,
                                 betas=(0.9, 0.999), eps=1e-8)
    rng = np.random.default_rng(config.seed)

    best_val, best_state, bad = math.inf, None, 0
    stopped_early = False
    curve = []
    train_loss = math.nan
    step = 0
    for step in range(1, config.max_steps+1):
        loss, _ = _window_loss(network, windows.sample(rng, config.batch))
        train_loss = loss.item()
        if not math.isfinite(train_loss):
            raise io_nb.TrainingError(
                "the training loss became %s at step %d (learning rate %g)" % (
                    train_loss, step, config.learning_rate))
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        if step % config.eval_every and step != config.max_steps:
            continue
        network.eval()
        val_loss = _evaluate(network, evaluation, config.batch)
        network.train()
        if not math.isfinite(val_loss):
            raise io_nb.TrainingError(
                "the validation loss became %s at step %d" % (val_loss, step))
        curve.append((step, train_loss, val_loss))
        if val_loss < best_val:
            best_val, bad = val_loss, 0
            best_state = copy.deepcopy(network.state_dict())
        else:
            bad += 1
            if bad >= config.patience:
                stopped_early = True
                break
        io_nb.progress(command_line, "step %d: train %.4f, validation %.4f" % (
            step, train_loss, val_loss))

    network.load_state_dict(best_state)
    network.eval()
    report = TrainReport(step, train_loss, best_val, stopped_early, curve)
    return TokenModel(config, network, trained=True), report


def _check_context(model, context):
    context = np.asarray(context, dtype=np.int64).reshape(-1)
    if len(context) == 0:
        raise io_nb.ArgumentError("the context must hold at least one token")
    if context.min() < 0 or context.max() >= model.config.vocab:
        raise io_nb.ArgumentError(
            "context tokens outside of [0, %d)" % model.config.vocab)
    return context[-model.config.context:]


def _next_logits(model, context):
    tokens = torch.as_tensor(context[None, :], dtype=torch.long)
    with torch.no_grad():
        return model.network(tokens)[0, -1].to(torch.float64)


def next_token_dist(model, context):
    """
    Probability of every token after `context`

    Contexts longer than `config.context` are truncated to their most recent
    tokens.
    """
    context = _check_context(model, context)
    probabilities = F.softmax(_next_logits(model, context), dim=-1).numpy()
    return probabilities/probabilities.sum()


def iterate(model, context, mode=None):
    """
    Endless autoregressive continuation of `context`, one token at a time

    Used when the number of tokens to draw is only known while decoding.
    """
    mode = mode or DecodeMode.sample(1., 0)
    sequence = list(_check_context(model, context))
    rng = np.random.default_rng(mode.seed)
    while True:
        logits = _next_logits(model, np.asarray(
            sequence[-model.config.context:], dtype=np.int64))
        if mode.kind == 'greedy':
            token = int(torch.argmax(logits))
        elif mode.kind == 'median':
            cumulative = np.cumsum(F.softmax(logits, dim=-1).numpy())
            token = min(int(np.searchsorted(cumulative, 0.5*cumulative[-1])),
                        model.config.vocab - 1)
        else:
            weights = F.softmax(logits/mode.temperature, dim=-1).numpy()
            cumulative = np.cumsum(weights)
            token = int(np.searchsorted(
                cumulative, rng.random()*cumulative[-1], side='right'))
            token = min(token, model.config.vocab - 1)
        sequence.append(token)
        yield token


def generate(model, context, n, mode=None):
    """
    Extend `context` autoregressively by `n` tokens

    Parameters
    ----------
    mode : DecodeMode
        sampling at temperature 1 when omitted

    Returns
    -------
    tokens : numpy.ndarray of int64, the `n` new tokens only

    """
    if n < 0:
        raise io_nb.ArgumentError("cannot generate a negative number of tokens")
    context = _check_context(model, context)
    return np.fromiter(itertools.islice(iterate(model, context, mode), n),
                       dtype=np.int64, count=n)


def sequence_log_probs(model, seq):
    """
    Teacher-forced log-probabilities, shape (len(seq), vocab)

    Row i is the distribution of the token following seq[:i+1]. Sequences
    longer than `config.context` are first truncated to their last tokens.
    """
    seq = _check_context(model, seq)
    with torch.no_grad():
        logits = model.network(torch.as_tensor(seq[None, :], dtype=torch.long))
    return F.log_softmax(logits[0].to(torch.float64), dim=-1).numpy()


def embed(model, seq):
    """
    Mean over positions of the final hidden states of `seq`

    A sequence longer than `config.context` is cut into consecutive chunks of
    at most that many tokens, each run on its own, and every position of
    every chunk enters the mean.
    """
    seq = np.asarray(seq, dtype=np.int64).reshape(-1)
    if len(seq) == 0:
        raise io_nb.ArgumentError("cannot embed an empty sequence")
    _check_context(model, seq)
    span, total = model.config.context, 0.
    with torch.no_grad():
        for begin in range(0, len(seq), span):
            states = model.network.hidden_states(torch.as_tensor(
                seq[None, begin:begin+span], dtype=torch.long))
            total = total + states[0].sum(dim=0)
    return (total/len(seq)).to(torch.float64).numpy()


def grad_check(config, seq, indices, step=1e-5):
    """
    Compare back-propagated and finite-difference gradients

    The loss is the mean next-token cross-entropy of `seq` under teacher
    forcing, for a freshly initialised 64-bit model of `config`. Each sampled
    parameter is moved by +-`step` and the central difference is compared to
    the analytic gradient.

    Returns
    -------
    error : float
        max over `indices` of |a - n| / max(|a| + |n|, 1e-5), zero for an
        empty index list

    """
    config = config.replace(precision='float64')
    network = build_network(config)
    network.eval()
    window = [np.asarray(seq, dtype=np.int64)[-(config.context+1):]]

    def loss_value():
        with torch.no_grad():
            return float(_window_loss(network, window)[0])

    loss, _ = _window_loss(network, window)
    network.zero_grad()
    loss.backward()
    analytic = torch.cat([param.grad.reshape(-1)
                          for param in network.parameters()]).numpy().copy()
    flat = nn.utils.parameters_to_vector(network.parameters()).detach().clone()

    error = 0.
    for index in indices:
        original = float(flat[index])
        values = []
        for shift in (step, -step):
            flat[index] = original + shift
            nn.utils.vector_to_parameters(flat, network.parameters())
            values.append(loss_value())
        flat[index] = original
        nn.utils.vector_to_parameters(flat, network.parameters())
        numeric = (values[0] - values[1])/(2*step)
        error = max(error, abs(analytic[index] - numeric)/max(
            abs(analytic[index]) + abs(numeric), 1e-5))
    return error


def save_checkpoint(model, path):
    """
    Structured-text header, then the flat parameters as little-endian float64

    The header records the format version, the configuration and the layout
    of the payload.
    """
    io_nb.write_structured(path, 'checkpoint', [
        ('format_version', CHECKPOINT_VERSION),
        ('config', model.config.as_dict()),
        ('trained', model.trained),
        ('layout', model.layout()),
        ('count', model.parameter_count())],
        header="NetBurst token model checkpoint")
    with open(path, 'ab') as out:
        out.write(END_HEADER)
        out.write(np.asarray(model.params, dtype='<f8').tobytes())


def load_checkpoint(path):
    try:
        with open(path, 'rb') as source:
            content = source.read()
    except IOError:
        raise io_nb.ConfigurationError("The checkpoint '%s' does not exist" % path)
    position = content.find(b'\n' + END_HEADER)
    if position < 0:
        raise io_nb.DataError("%s is not a token model checkpoint" % path)
    header = io_nb.parse_structured(
        content[:position].decode('utf-8').split('\n'), 'checkpoint', path)
    if header.get('format_version') != CHECKPOINT_VERSION:
        raise io_nb.DataError("%s: unsupported checkpoint version %r" % (
            path, header.get('format_version')))
    model = TokenModel(ModelConfig(**header['config']),
                       trained=header.get('trained', False))
    payload = np.frombuffer(content[position+1+len(END_HEADER):], dtype='<f8')
    layout = [(name, tuple(shape)) for name, shape in header.get('layout', [])]
    if len(payload) != model.parameter_count() or layout != model.layout():
        raise io_nb.DataError("%s: the payload does not match the layout" % path)
    nn.utils.vector_to_parameters(
        torch.as_tensor(payload.copy()).to(model.config.dtype),
        model.network.parameters())
    return model
