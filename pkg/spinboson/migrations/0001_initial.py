# Generated by Django 6.0 on 2026-10-19 09:00

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='InvariantCheck',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('label', models.CharField(max_length=100)),
                ('suite', models.CharField(max_length=50)),
                ('passed', models.BooleanField()),
                ('value', models.FloatField()),
                ('tolerance', models.FloatField()),
                ('detail', models.TextField(blank=True, default='')),
                ('alpha_sign', models.FloatField(default=1.0)),
                ('checked_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-checked_at', 'suite'],
            },
        ),
        migrations.CreateModel(
            name='SweepRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('label', models.CharField(max_length=100)),
                ('seed', models.BigIntegerField(default=0)),
                ('nu_regime', models.CharField(max_length=20)),
                ('config_source', models.CharField(blank=True, default='', max_length=500)),
                ('output_dir', models.CharField(blank=True, default='', max_length=500)),
                ('number_moment_bound', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='SweepCell',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('epsilon', models.FloatField()),
                ('t', models.FloatField()),
                ('trace_distance', models.FloatField()),
                ('fourier_gap_max', models.FloatField()),
                ('number_moment_delta1', models.FloatField()),
                ('duhamel_residual', models.FloatField()),
                ('transport_residual', models.FloatField()),
                ('tail_mass', models.FloatField()),
                ('wall_ms', models.FloatField(default=0.0)),
                ('untrusted', models.BooleanField(default=False)),
                ('fitted_order', models.FloatField(blank=True, null=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='cells', to='spinboson.sweeprun')),
            ],
            options={
                'ordering': ['run', '-epsilon', 't'],
                'constraints': [models.UniqueConstraint(fields=('run', 'epsilon', 't'), name='unique_cell_per_run')],
            },
        ),
    ]
