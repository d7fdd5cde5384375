# Generated by Django 5.2.8 on 2026-10-19 10:00

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='Run',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('adapt', 'Adaptation'), ('eval', 'Evaluation'), ('suite', 'Scenario suite'), ('ablate', 'Ablation suite')], max_length=16)),
                ('name', models.CharField(blank=True, max_length=200)),
                ('config', models.JSONField(default=dict)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='ScenarioResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(max_length=100)),
                ('variant', models.CharField(default='full', max_length=50)),
                ('seed', models.IntegerField(default=0)),
                ('sources', models.CharField(blank=True, max_length=200)),
                ('target', models.CharField(blank=True, max_length=50)),
                ('source_only_mf1', models.FloatField(blank=True, null=True)),
                ('cpfm_mf1', models.FloatField(blank=True, null=True)),
                ('upper_bound_mf1', models.FloatField(blank=True, null=True)),
                ('seconds', models.FloatField(default=0.0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='results', to='cpfm.run')),
            ],
            options={
                'ordering': ['scenario', 'variant', 'seed'],
            },
        ),
        migrations.CreateModel(
            name='EpochLog',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(max_length=100)),
                ('variant', models.CharField(default='full', max_length=50)),
                ('seed', models.IntegerField(default=0)),
                ('epoch', models.PositiveIntegerField()),
                ('ce', models.FloatField()),
                ('pr', models.FloatField()),
                ('ir', models.FloatField()),
                ('seconds', models.FloatField(default=0.0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='epochs', to='cpfm.run')),
            ],
            options={
                'ordering': ['scenario', 'variant', 'seed', 'epoch'],
            },
        ),
        migrations.CreateModel(
            name='TransferWeightLog',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(max_length=100)),
                ('variant', models.CharField(default='full', max_length=50)),
                ('seed', models.IntegerField(default=0)),
                ('epoch', models.PositiveIntegerField()),
                ('teacher', models.PositiveIntegerField()),
                ('eta', models.FloatField()),
                ('lam', models.FloatField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='transfer_weights', to='cpfm.run')),
            ],
            options={
                'ordering': ['scenario', 'variant', 'seed', 'epoch', 'teacher'],
            },
        ),
    ]
