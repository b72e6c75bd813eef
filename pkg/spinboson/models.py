from django.db import models


class SweepRun(models.Model):
    label = models.CharField(max_length=100)
    seed = models.CharField(max_length=20, default='0')  # u64 as a decimal string
    nu_regime = models.CharField(max_length=20)  # stationary, free_field
    config_source = models.CharField(max_length=500, blank=True, default='')
    output_dir = models.CharField(max_length=500, blank=True, default='')

    # Largest number_moment(t)/number_moment(0) at delta = 1/2 over the sweep
    number_moment_bound = models.FloatField(null=True, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.label} ({self.nu_regime}, seed {self.seed}) - {self.created_at.strftime('%Y-%m-%d %H:%M')}"


class SweepCell(models.Model):
    run = models.ForeignKey(SweepRun, on_delete=models.CASCADE, related_name='cells')
    epsilon = models.FloatField()
    t = models.FloatField()

    trace_distance = models.FloatField()
    fourier_gap_max = models.FloatField()
    number_moment_delta1 = models.FloatField()
    duhamel_residual = models.FloatField()
    transport_residual = models.FloatField()
    tail_mass = models.FloatField()
    wall_ms = models.FloatField(default=0.0)

    # Tail mass above 0.1 x trace distance
    untrusted = models.BooleanField(default=False)
    fitted_order = models.FloatField(null=True, blank=True)

    class Meta:
        ordering = ['run', '-epsilon', 't']
        constraints = [
            models.UniqueConstraint(fields=['run', 'epsilon', 't'], name='unique_cell_per_run'),
        ]

    def __str__(self):
        return f"eps={self.epsilon:g} t={self.t:g}: D={self.trace_distance:.3e}"


class InvariantCheck(models.Model):
    label = models.CharField(max_length=100)
    suite = models.CharField(max_length=50)  # ccr, weyl, unitarity, ...
    passed = models.BooleanField()
    value = models.FloatField()
    tolerance = models.FloatField()
    detail = models.TextField(blank=True, default='')
    alpha_sign = models.FloatField(default=1.0)
    checked_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-checked_at', 'suite']

    def __str__(self):
        return f"{self.suite}: {'pass' if self.passed else 'FAIL'} ({self.label})"
