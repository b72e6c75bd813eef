# Generated by Django 6.0 on 2026-10-19 14:20

from django.db import migrations, models


class Migration(migrations.Migration):

    dependencies = [
        ('spinboson', '0001_initial'),
    ]

    operations = [
        migrations.AlterField(
            model_name='sweeprun',
            name='seed',
            field=models.CharField(default='0', max_length=20),
        ),
    ]
