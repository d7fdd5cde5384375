from django.db import models


class Run(models.Model):
    """One invocation of a harness command whose results were recorded."""
    KIND_CHOICES = [
        ('adapt', 'Adaptation'),
        ('eval', 'Evaluation'),
        ('suite', 'Scenario suite'),
        ('ablate', 'Ablation suite'),
    ]

    kind = models.CharField(max_length=16, choices=KIND_CHOICES)
    name = models.CharField(max_length=200, blank=True)
    config = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f'{self.get_kind_display()} #{self.pk} {self.name}'.strip()


class ScenarioResult(models.Model):
    """MF1 scores of one (scenario, variant, seed) cell."""
    run = models.ForeignKey(Run, on_delete=models.CASCADE, related_name='results')
    scenario = models.CharField(max_length=100)
    variant = models.CharField(max_length=50, default='full')
    seed = models.IntegerField(default=0)
    sources = models.CharField(max_length=200, blank=True)
    target = models.CharField(max_length=50, blank=True)
    source_only_mf1 = models.FloatField(null=True, blank=True)
    cpfm_mf1 = models.FloatField(null=True, blank=True)
    upper_bound_mf1 = models.FloatField(null=True, blank=True)
    seconds = models.FloatField(default=0.0)

    class Meta:
        ordering = ['scenario', 'variant', 'seed']

    def __str__(self):
        return f'{self.scenario} [{self.variant}] seed {self.seed}'


class EpochLog(models.Model):
    run = models.ForeignKey(Run, on_delete=models.CASCADE, related_name='epochs')
    scenario = models.CharField(max_length=100)
    variant = models.CharField(max_length=50, default='full')
    seed = models.IntegerField(default=0)
    epoch = models.PositiveIntegerField()
    ce = models.FloatField()
    pr = models.FloatField()
    ir = models.FloatField()
    seconds = models.FloatField(default=0.0)

    class Meta:
        ordering = ['scenario', 'variant', 'seed', 'epoch']


class TransferWeightLog(models.Model):
    run = models.ForeignKey(Run, on_delete=models.CASCADE, related_name='transfer_weights')
    scenario = models.CharField(max_length=100)
    variant = models.CharField(max_length=50, default='full')
    seed = models.IntegerField(default=0)
    epoch = models.PositiveIntegerField()
    teacher = models.PositiveIntegerField()
    eta = models.FloatField()
    lam = models.FloatField()

    class Meta:
        ordering = ['scenario', 'variant', 'seed', 'epoch', 'teacher']
